import json
import random
from datetime import date

import pytest

from corpusqg.qg import QuestionRecord


def make_record(question, doc_id="d1", span_index=0, publish_date=None, backend_id="mock"):
    return QuestionRecord(
        question=question,
        doc_id=doc_id,
        span_index=span_index,
        publish_date=publish_date,
        backend_id=backend_id,
    )


@pytest.fixture
def record_factory():
    return make_record


def synthetic_corpus(num_docs=20, sentences_per_passage=6, passages=2, seed=7):
    """Small deterministic corpus covering dates, missing dates, and keywords."""
    rng = random.Random(seed)
    words = [
        "covid", "virus", "vaccine", "treatment", "transmission", "mask",
        "antibody", "wuhan", "symptom", "outbreak", "immunity", "protein",
    ]
    docs = []
    for i in range(num_docs):
        doc_passages = []
        for _ in range(passages):
            sentences = []
            for _ in range(sentences_per_passage):
                picked = rng.sample(words, 3)
                sentences.append(f"The {picked[0]} affects {picked[1]} and {picked[2]}.")
            doc_passages.append(" ".join(sentences))
        publish = None if i % 7 == 6 else date(2020, 1 + i % 9, 1 + i % 27).isoformat()
        docs.append(
            {
                "doc_id": f"doc-{i:03d}",
                "title": f"Study {i} of covid effects",
                "publish_date": publish,
                "passages": doc_passages,
            }
        )
    return docs


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
    return path


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_jsonl(path, synthetic_corpus())
    return path
