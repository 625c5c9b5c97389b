import random
from collections import Counter

import numpy as np
import pytest

from corpusqg.aggregate import FrequencyEntry
from corpusqg.resources import STOPWORDS_SHA256, load_stopwords, stopwords_checksum
from corpusqg.topics import (
    TopicModel,
    Vocab,
    build_vocab,
    fit_lda,
    fit_lda_texts,
    ngram_frequencies,
    representative_questions,
    top_terms,
)


NO_STOPWORDS = frozenset()


class TestResources:
    def test_stopword_list_checksum_pinned(self):
        assert stopwords_checksum() == STOPWORDS_SHA256

    def test_common_words_present(self):
        stopwords = load_stopwords()
        assert {"the", "of", "and", "what", "is"} <= stopwords


class TestBuildVocab:
    def test_bigram_example(self):
        vocab = build_vocab(["covid 19 covid 19"], max_n=2, min_count=2, stopwords=NO_STOPWORDS)
        assert set(vocab.entries) == {"covid", "19", "covid_19"}

    def test_all_stopword_text_gives_empty_vocab(self):
        vocab = build_vocab(["the of and the"], max_n=2, min_count=1)
        assert vocab.entries == ()

    def test_unigrams_only(self):
        vocab = build_vocab(["covid spreads covid"], max_n=1, min_count=1, stopwords=NO_STOPWORDS)
        assert set(vocab.entries) == {"covid", "spreads"}

    def test_stopwords_removed_before_ngram_formation(self):
        vocab = build_vocab(["role of ace2"], max_n=2, min_count=1)
        assert "role_ace2" in vocab.entries
        assert all("of" not in entry.split("_") for entry in vocab.entries)

    def test_entries_sorted_with_dense_ids(self):
        vocab = build_vocab(["zebra apple mango"], max_n=1, min_count=1, stopwords=NO_STOPWORDS)
        assert vocab.entries == ("apple", "mango", "zebra")
        assert vocab.index == {"apple": 0, "mango": 1, "zebra": 2}

    def test_min_count_prunes(self):
        vocab = build_vocab(["rare common", "common"], max_n=1, min_count=2, stopwords=NO_STOPWORDS)
        assert vocab.entries == ("common",)

    def test_encode_in_occurrence_order(self):
        vocab = build_vocab(["covid vaccine covid"], max_n=1, min_count=1, stopwords=NO_STOPWORDS)
        ids = vocab.encode("covid vaccine covid", stopwords=NO_STOPWORDS)
        assert [vocab.entries[i] for i in ids] == ["covid", "vaccine", "covid"]

    def test_encode_skips_out_of_vocab(self):
        vocab = build_vocab(["covid"], max_n=1, min_count=1, stopwords=NO_STOPWORDS)
        assert vocab.encode("covid unseen", stopwords=NO_STOPWORDS) == [0]

    def test_validation(self):
        with pytest.raises(ValueError):
            build_vocab([], max_n=0)
        with pytest.raises(ValueError):
            build_vocab([], min_count=0)


class TestNgramFrequencies:
    def test_empty_corpus(self):
        assert ngram_frequencies([], max_n=3) == []

    def test_simple_count(self):
        got = ngram_frequencies(["covid covid sars"], max_n=1, stopwords=NO_STOPWORDS, top_k=1)
        assert got == [("covid", 2)]

    def test_matches_brute_force_counter(self):
        rng = random.Random(8)
        words = ["alpha", "beta", "gamma", "delta"]
        texts = [" ".join(rng.choice(words) for _ in range(12)) for _ in range(10)]
        got = ngram_frequencies(texts, max_n=2, stopwords=NO_STOPWORDS)
        expected = Counter()
        for text in texts:
            tokens = text.split()
            for i in range(len(tokens)):
                expected[tokens[i]] += 1
                if i + 1 < len(tokens):
                    expected[f"{tokens[i]}_{tokens[i+1]}"] += 1
        assert dict(got) == dict(expected)
        ranks = [(-c, g) for g, c in got]
        assert ranks == sorted(ranks)


def planted_corpus(num_docs=200, doc_len=30, seed=42):
    rng = random.Random(seed)
    block_a = [f"alpha{i}" for i in range(10)]
    block_b = [f"beta{i}" for i in range(10)]
    vocab = Vocab(entries=tuple(sorted(block_a + block_b)), min_count=1, max_n=1)
    index = vocab.index
    docs, labels = [], []
    for d in range(num_docs):
        block = block_a if d % 2 == 0 else block_b
        docs.append([index[rng.choice(block)] for _ in range(doc_len)])
        labels.append(f"doc{d}")
    return vocab, docs, labels


class TestFitLda:
    def test_k1_theta_exact_and_phi_global_frequency(self):
        vocab, docs, labels = planted_corpus(num_docs=20, doc_len=10)
        model = fit_lda(docs, 1, vocab=vocab, iterations=5, seed=1, doc_labels=labels)
        assert np.array_equal(model.theta, np.ones((20, 1)))
        counts = Counter(token for doc in docs for token in doc)
        total = sum(counts.values())
        beta = model.beta
        expected = [
            (counts.get(w, 0) + beta) / (total + len(vocab) * beta)
            for w in range(len(vocab))
        ]
        assert np.allclose(model.phi[0], expected, atol=1e-9)

    def test_rows_are_distributions(self):
        vocab, docs, labels = planted_corpus(num_docs=30, doc_len=15)
        model = fit_lda(docs, 3, vocab=vocab, iterations=20, seed=5, doc_labels=labels)
        assert np.allclose(model.phi.sum(axis=1), 1.0, atol=1e-9)
        assert np.allclose(model.theta.sum(axis=1), 1.0, atol=1e-9)
        assert (model.phi >= 0).all() and (model.theta >= 0).all()

    def test_same_seed_bit_identical(self):
        vocab, docs, labels = planted_corpus(num_docs=30, doc_len=15)
        a = fit_lda(docs, 2, vocab=vocab, iterations=30, seed=7, doc_labels=labels)
        b = fit_lda(docs, 2, vocab=vocab, iterations=30, seed=7, doc_labels=labels)
        assert a.assignments == b.assignments
        assert np.array_equal(a.phi, b.phi)
        assert np.array_equal(a.theta, b.theta)

    def test_different_seed_differs(self):
        vocab, docs, labels = planted_corpus(num_docs=30, doc_len=15)
        a = fit_lda(docs, 2, vocab=vocab, iterations=10, seed=1, doc_labels=labels)
        b = fit_lda(docs, 2, vocab=vocab, iterations=10, seed=2, doc_labels=labels)
        assert a.assignments != b.assignments

    def test_assignments_consistent_with_counts(self):
        """Post-fit conservation: final counts rebuilt from assignments must
        reproduce phi and theta exactly."""
        vocab, docs, labels = planted_corpus(num_docs=24, doc_len=12)
        K = 2
        model = fit_lda(docs, K, vocab=vocab, iterations=15, seed=3, doc_labels=labels)
        total_tokens = sum(len(doc) for doc in docs)
        flat = [z for doc_z in model.assignments for z in doc_z]
        assert len(flat) == total_tokens
        n_kw = np.zeros((K, len(vocab)))
        n_dk = np.zeros((len(docs), K))
        for d, (doc, doc_z) in enumerate(zip(docs, model.assignments)):
            for w, z in zip(doc, doc_z):
                n_kw[z, w] += 1
                n_dk[d, z] += 1
        beta, alpha = model.beta, model.alpha
        phi = (n_kw + beta) / (n_kw.sum(axis=1, keepdims=True) + len(vocab) * beta)
        theta = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + K * alpha)
        assert np.array_equal(phi, model.phi)
        assert np.array_equal(theta, model.theta)

    def test_planted_blocks_recovered(self):
        vocab, docs, labels = planted_corpus()
        model = fit_lda(docs, 2, vocab=vocab, iterations=200, seed=13, doc_labels=labels)
        prefixes = []
        for topic in range(2):
            terms = [t for t, _ in top_terms(model, 5, topic)]
            majority = Counter(t.rstrip("0123456789") for t in terms).most_common(1)[0]
            assert majority[1] >= 5 * 0.9
            prefixes.append(majority[0])
        assert set(prefixes) == {"alpha", "beta"}

    def test_empty_docs_skipped_with_report(self):
        vocab, docs, labels = planted_corpus(num_docs=4, doc_len=6)
        docs[2] = []
        model = fit_lda(docs, 2, vocab=vocab, iterations=5, seed=1, doc_labels=labels)
        assert model.skipped_docs == ("doc2",)
        assert model.doc_labels == ("doc0", "doc1", "doc3")
        assert model.theta.shape == (3, 2)

    def test_empty_vocab_error(self):
        with pytest.raises(ValueError):
            fit_lda([], 2, vocab=Vocab(entries=(), min_count=1, max_n=1))

    def test_alpha_defaults_to_50_over_k(self):
        vocab, docs, labels = planted_corpus(num_docs=4, doc_len=6)
        model = fit_lda(docs, 4, vocab=vocab, iterations=1, seed=1, doc_labels=labels)
        assert model.alpha == 12.5

    def test_fit_from_texts(self):
        texts = ["covid vaccine covid", "mask mandate mask", "covid vaccine"]
        model = fit_lda_texts(texts, num_topics=2, max_n=1, iterations=10, seed=2)
        assert model.doc_labels == tuple(texts)
        assert model.theta.shape == (3, 2)


class TestTopTerms:
    def test_k_zero(self):
        vocab, docs, labels = planted_corpus(num_docs=4, doc_len=6)
        model = fit_lda(docs, 1, vocab=vocab, iterations=1, seed=1, doc_labels=labels)
        assert top_terms(model, 0, 0) == []

    def test_single_word_corpus(self):
        vocab = Vocab(entries=("only",), min_count=1, max_n=1)
        model = fit_lda([[0, 0, 0]], 1, vocab=vocab, iterations=2, seed=1, doc_labels=["d"])
        assert top_terms(model, 1, 0) == [("only", pytest.approx(1.0, abs=1e-9))]

    def test_invalid_topic(self):
        vocab = Vocab(entries=("only",), min_count=1, max_n=1)
        model = fit_lda([[0]], 1, vocab=vocab, iterations=1, seed=1, doc_labels=["d"])
        with pytest.raises(ValueError):
            top_terms(model, 1, 5)


def manual_model(questions, theta):
    """A TopicModel shell with hand-set theta for formula tests."""
    theta = np.asarray(theta, dtype=float)
    return TopicModel(
        num_topics=theta.shape[1],
        alpha=1.0,
        beta=0.01,
        iterations=0,
        seed=0,
        vocab=Vocab(entries=("x",), min_count=1, max_n=1),
        phi=np.ones((theta.shape[1], 1)),
        theta=theta,
        doc_labels=tuple(questions),
    )


class TestRepresentativeQuestions:
    def test_single_question_represents_every_topic(self):
        model = manual_model(["what is covid"], [[0.4, 0.6]])
        freq = [FrequencyEntry("what is covid", 3, 1)]
        assert representative_questions(model, freq) == ["what is covid", "what is covid"]

    def test_higher_frequency_wins_at_equal_theta(self):
        model = manual_model(["q high", "q low"], [[0.5, 0.5], [0.5, 0.5]])
        freq = {"q high": 10, "q low": 2}
        assert representative_questions(model, freq) == ["q high", "q high"]

    def test_formula_argmax(self):
        model = manual_model(["a", "b"], [[0.9, 0.1], [0.2, 0.8]])
        freq = {"a": 2, "b": 5}
        # topic 0: a=1.8 vs b=1.0 -> a; topic 1: a=0.2 vs b=4.0 -> b
        assert representative_questions(model, freq) == ["a", "b"]

    def test_scaling_invariance(self):
        model = manual_model(["a", "b", "c"], [[0.7, 0.3], [0.5, 0.5], [0.1, 0.9]])
        freq = {"a": 4, "b": 6, "c": 5}
        base = representative_questions(model, freq)
        doubled = representative_questions(model, {q: 2 * c for q, c in freq.items()})
        assert doubled == base

    def test_tie_broken_by_question_text(self):
        model = manual_model(["zz", "aa"], [[0.5, 0.5], [0.5, 0.5]])
        freq = {"zz": 3, "aa": 3}
        assert representative_questions(model, freq) == ["aa", "aa"]

    def test_missing_question_in_freq_errors(self):
        model = manual_model(["a", "b"], [[1.0], [1.0]])
        with pytest.raises(ValueError, match="missing"):
            representative_questions(model, {"a": 1})


class TestModelIO:
    def test_save_load_round_trip(self, tmp_path):
        vocab, docs, labels = planted_corpus(num_docs=6, doc_len=8)
        model = fit_lda(docs, 2, vocab=vocab, iterations=5, seed=9, doc_labels=labels)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = TopicModel.load(path)
        assert loaded.num_topics == 2
        assert loaded.vocab == vocab
        assert np.array_equal(loaded.phi, model.phi)
        assert np.array_equal(loaded.theta, model.theta)
        assert loaded.doc_labels == model.doc_labels
        assert loaded.assignments is None
