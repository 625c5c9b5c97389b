"""N-gram vocabularies, collapsed-Gibbs LDA, and topic reporting.

These are the aggregation baselines: word-cloud-style n-gram frequencies
and topic models fitted either over document passages or over generated
questions (one question per pseudo-document). The Gibbs sampler is a plain
sequential implementation so that a fixed seed reproduces assignments,
phi, and theta bit-for-bit.
"""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .aggregate import FrequencyEntry
from .resources import load_stopwords

__all__ = [
    "Vocab",
    "TopicModel",
    "build_vocab",
    "fit_lda",
    "fit_lda_texts",
    "top_terms",
    "representative_questions",
    "ngram_frequencies",
]

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _content_tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in stopwords]


def _ngrams(tokens: Sequence[str], max_n: int) -> list[str]:
    grams: list[str] = []
    for i in range(len(tokens)):
        for n in range(1, max_n + 1):
            if i + n > len(tokens):
                break
            grams.append("_".join(tokens[i : i + n]))
    return grams


@dataclass(frozen=True)
class Vocab:
    """Ordered n-gram vocabulary with dense ids."""

    entries: tuple[str, ...]
    min_count: int
    max_n: int

    @property
    def index(self) -> dict[str, int]:
        cached = getattr(self, "_index_cache", None)
        if cached is None:
            cached = {term: i for i, term in enumerate(self.entries)}
            object.__setattr__(self, "_index_cache", cached)
        return cached

    def __len__(self) -> int:
        return len(self.entries)

    def encode(self, text: str, stopwords: frozenset[str] | None = None) -> list[int]:
        """In-vocab n-gram ids for a text, in order of occurrence."""
        stopwords = load_stopwords() if stopwords is None else stopwords
        index = self.index
        tokens = _content_tokens(text, stopwords)
        return [index[g] for g in _ngrams(tokens, self.max_n) if g in index]

    def to_json(self) -> dict:
        return {"entries": list(self.entries), "min_count": self.min_count, "max_n": self.max_n}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocab":
        return cls(
            entries=tuple(obj["entries"]),
            min_count=int(obj["min_count"]),
            max_n=int(obj["max_n"]),
        )


def build_vocab(
    texts: Iterable[str],
    max_n: int = 3,
    min_count: int = 1,
    stopwords: frozenset[str] | None = None,
) -> Vocab:
    """Collect all n-grams up to max_n occurring at least min_count times.

    Texts are tokenized on non-alphanumeric boundaries and lowercased;
    stopwords are removed before n-grams are formed, so no n-gram contains
    a stopword. N-gram words are joined with "_". Entries are ordered
    lexicographically, giving dense, reproducible ids.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    stopwords = load_stopwords() if stopwords is None else stopwords
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(_ngrams(_content_tokens(text, stopwords), max_n))
    entries = tuple(sorted(g for g, c in counts.items() if c >= min_count))
    return Vocab(entries=entries, min_count=min_count, max_n=max_n)


def ngram_frequencies(
    texts: Iterable[str],
    max_n: int = 3,
    stopwords: frozenset[str] | None = None,
    top_k: int | None = None,
) -> list[tuple[str, int]]:
    """Top n-grams by raw count (word-cloud input data).

    Deterministic ordering: count descending, then n-gram ascending.
    """
    stopwords = load_stopwords() if stopwords is None else stopwords
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(_ngrams(_content_tokens(text, stopwords), max_n))
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked if top_k is None else ranked[:top_k]


@dataclass
class TopicModel:
    """Fitted LDA state.

    phi is the topic-term distribution (num_topics x vocab size), theta the
    document-topic distribution (fitted docs x num_topics). doc_labels
    aligns with theta rows; documents with no in-vocab tokens are not
    fitted and appear in skipped_docs instead. assignments holds the final
    per-token topic ids (None for models loaded from disk).
    """

    num_topics: int
    alpha: float
    beta: float
    iterations: int
    seed: int
    vocab: Vocab
    phi: np.ndarray
    theta: np.ndarray
    doc_labels: tuple[str, ...]
    skipped_docs: tuple[str, ...] = ()
    assignments: list[list[int]] | None = None

    def save(self, path: str | Path) -> None:
        obj = {
            "num_topics": self.num_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "seed": self.seed,
            "vocab": self.vocab.to_json(),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "doc_labels": list(self.doc_labels),
            "skipped_docs": list(self.skipped_docs),
        }
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(obj, handle, ensure_ascii=False, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "TopicModel":
        with open(path, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
        return cls(
            num_topics=int(obj["num_topics"]),
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            iterations=int(obj["iterations"]),
            seed=int(obj["seed"]),
            vocab=Vocab.from_json(obj["vocab"]),
            phi=np.asarray(obj["phi"], dtype=np.float64),
            theta=np.asarray(obj["theta"], dtype=np.float64),
            doc_labels=tuple(obj["doc_labels"]),
            skipped_docs=tuple(obj["skipped_docs"]),
            assignments=None,
        )


def fit_lda(
    doc_tokens: Sequence[Sequence[int]],
    num_topics: int,
    vocab: Vocab,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 13,
    doc_labels: Sequence[str] | None = None,
) -> TopicModel:
    """Fit LDA by collapsed Gibbs sampling.

    Token assignments are sampled from the standard collapsed conditional
    p(z=k) proportional to (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta),
    sweeping documents and tokens in order for ``iterations`` full passes.
    phi and theta are point estimates from the final counts. alpha defaults
    to 50/num_topics. Documents with no tokens are skipped and reported via
    the model's skipped_docs.
    """
    if num_topics < 1:
        raise ValueError("num_topics must be >= 1")
    num_terms = len(vocab)
    if num_terms == 0:
        raise ValueError("vocabulary is empty")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    alpha = 50.0 / num_topics if alpha is None else alpha
    if doc_labels is None:
        doc_labels = [str(i) for i in range(len(doc_tokens))]
    if len(doc_labels) != len(doc_tokens):
        raise ValueError("doc_labels must parallel doc_tokens")

    docs: list[list[int]] = []
    labels: list[str] = []
    skipped: list[str] = []
    for label, tokens in zip(doc_labels, doc_tokens):
        if tokens:
            docs.append(list(tokens))
            labels.append(label)
        else:
            skipped.append(label)

    rng = random.Random(seed)
    num_docs = len(docs)
    n_dk = [[0] * num_topics for _ in range(num_docs)]
    n_kw = [[0] * num_terms for _ in range(num_topics)]
    n_k = [0] * num_topics
    assignments: list[list[int]] = []
    for d, doc in enumerate(docs):
        z_doc = []
        for w in doc:
            k = rng.randrange(num_topics)
            z_doc.append(k)
            n_dk[d][k] += 1
            n_kw[k][w] += 1
            n_k[k] += 1
        assignments.append(z_doc)

    v_beta = num_terms * beta
    weights = [0.0] * num_topics
    for _ in range(iterations):
        for d, doc in enumerate(docs):
            z_doc = assignments[d]
            dk = n_dk[d]
            for i, w in enumerate(doc):
                k = z_doc[i]
                dk[k] -= 1
                n_kw[k][w] -= 1
                n_k[k] -= 1
                total = 0.0
                for kk in range(num_topics):
                    p = (dk[kk] + alpha) * (n_kw[kk][w] + beta) / (n_k[kk] + v_beta)
                    weights[kk] = p
                    total += p
                u = rng.random() * total
                acc = 0.0
                k_new = num_topics - 1
                for kk in range(num_topics):
                    acc += weights[kk]
                    if u < acc:
                        k_new = kk
                        break
                z_doc[i] = k_new
                dk[k_new] += 1
                n_kw[k_new][w] += 1
                n_k[k_new] += 1

    phi = (np.asarray(n_kw, dtype=np.float64) + beta) / (
        np.asarray(n_k, dtype=np.float64)[:, None] + v_beta
    )
    doc_lengths = np.asarray([len(doc) for doc in docs], dtype=np.float64)
    theta = (np.asarray(n_dk, dtype=np.float64) + alpha) / (
        doc_lengths[:, None] + num_topics * alpha
    )
    return TopicModel(
        num_topics=num_topics,
        alpha=alpha,
        beta=beta,
        iterations=iterations,
        seed=seed,
        vocab=vocab,
        phi=phi,
        theta=theta,
        doc_labels=tuple(labels),
        skipped_docs=tuple(skipped),
        assignments=assignments,
    )


def fit_lda_texts(
    texts: Sequence[str],
    num_topics: int,
    max_n: int = 3,
    min_count: int = 1,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 13,
    stopwords: frozenset[str] | None = None,
    doc_labels: Sequence[str] | None = None,
) -> TopicModel:
    """Build a vocabulary over texts and fit LDA in one step."""
    stopwords = load_stopwords() if stopwords is None else stopwords
    vocab = build_vocab(texts, max_n=max_n, min_count=min_count, stopwords=stopwords)
    doc_tokens = [vocab.encode(text, stopwords) for text in texts]
    labels = doc_labels if doc_labels is not None else list(texts)
    return fit_lda(
        doc_tokens,
        num_topics,
        vocab=vocab,
        alpha=alpha,
        beta=beta,
        iterations=iterations,
        seed=seed,
        doc_labels=labels,
    )


def top_terms(model: TopicModel, k: int, topic: int) -> list[tuple[str, float]]:
    """Top-k vocabulary entries for one topic, by weight then term."""
    if not 0 <= topic < model.num_topics:
        raise ValueError(f"topic must be in [0, {model.num_topics})")
    if k < 0:
        raise ValueError("k must be >= 0")
    row = model.phi[topic]
    order = sorted(range(len(model.vocab)), key=lambda w: (-row[w], model.vocab.entries[w]))
    return [(model.vocab.entries[w], float(row[w])) for w in order[:k]]


def representative_questions(
    model: TopicModel, freq: Sequence[FrequencyEntry] | Mapping[str, int]
) -> list[str]:
    """Pick, per topic, the question maximizing frequency times topic weight.

    The model must be fitted with one question per document; ``freq`` must
    cover every fitted question. For topic k the winner is the argmax over
    questions q of span_count(q) * theta[q][k], ties broken by question
    text ascending.
    """
    if isinstance(freq, Mapping):
        counts = dict(freq)
    else:
        counts = {entry.question: entry.span_count for entry in freq}
    missing = [label for label in model.doc_labels if label not in counts]
    if missing:
        raise ValueError(f"frequency table missing {len(missing)} question(s), e.g. {missing[:3]}")
    count_vec = np.asarray([counts[label] for label in model.doc_labels], dtype=np.float64)
    scores = count_vec[:, None] * model.theta
    winners: list[str] = []
    for k in range(model.num_topics):
        column = scores[:, k]
        best = column.max()
        winners.append(
            min(label for d, label in enumerate(model.doc_labels) if column[d] == best)
        )
    return winners
