"""corpusqg: summarize a document collection by the questions its passages answer.

Pipeline: ingest a JSON-lines corpus, window documents into sentence spans,
generate one question per span (remote model service or deterministic
mock), filter and normalize the questions, then aggregate by frequency and
publication month. Evaluation utilities rank generated questions against
human reference questions via greedy embedding matching, and LDA / n-gram
baselines provide comparison output.
"""

__version__ = "0.1.0"

from .aggregate import (
    FrequencyEntry,
    TimeBucketSeries,
    count_frequencies,
    filter_by_doc_frequency,
    keyword_group_series,
)
from .ingest import CorpusFilter, Document, filter_corpus, load_corpus
from .match_eval import (
    AnnotationSheet,
    HashEmbedder,
    MatchCandidate,
    RemoteEmbedder,
    TokenEmbeddingSeq,
    bertscore,
    frequent_question_experiment,
    per_document_experiment,
    rank_candidates,
    summarize_annotations,
)
from .postprocess import FilterConfig, filter_questions, normalize_question
from .preprocess import (
    SentenceSpan,
    WindowConfig,
    clean_text,
    document_spans,
    split_sentences,
    window_spans,
)
from .qg import (
    GenerationConfig,
    MockBackend,
    QuestionRecord,
    RemoteBackend,
    generate,
    mock_generate,
)
from .topics import (
    TopicModel,
    Vocab,
    build_vocab,
    fit_lda,
    fit_lda_texts,
    ngram_frequencies,
    representative_questions,
    top_terms,
)
