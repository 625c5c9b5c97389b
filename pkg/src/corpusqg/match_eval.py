"""Greedy embedding matching, candidate ranking, and annotation workflows.

Similarity between a reference question and a candidate follows the
BERTScore recipe: cosine similarity between per-token contextual
embeddings, greedily matched in both directions and summarized as
precision/recall/F1. The embedding source is pluggable: a remote service
for real contextual embeddings, or a deterministic hash-seeded stub that
exercises all of the ranking math offline.

Ranked candidates are written to annotation sheets, where a human labels
each row strong/weak/none; summaries are computed from completed sheets.
"""

from __future__ import annotations

import csv
import hashlib
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np
import requests

from .aggregate import FrequencyEntry

__all__ = [
    "TokenEmbeddingSeq",
    "MatchScores",
    "MatchCandidate",
    "SheetRow",
    "AnnotationSheet",
    "AnnotationSummary",
    "EmbeddingError",
    "EmbeddingBackend",
    "HashEmbedder",
    "RemoteEmbedder",
    "bertscore",
    "rank_candidates",
    "per_document_experiment",
    "frequent_question_experiment",
    "summarize_annotations",
]

LABELS = ("strong", "weak", "none")
UNSET_LABEL = ""


class EmbeddingError(RuntimeError):
    """The embedding backend failed or returned unusable output."""


@dataclass(frozen=True)
class TokenEmbeddingSeq:
    """Per-token embedding sequence; vectors are stored unit-normalized."""

    tokens: tuple[str, ...]
    vectors: np.ndarray

    @classmethod
    def from_raw(cls, tokens: Sequence[str], vectors: np.ndarray | Sequence[Sequence[float]]) -> "TokenEmbeddingSeq":
        array = np.asarray(vectors, dtype=np.float64)
        if len(tokens) == 0:
            raise EmbeddingError("empty token sequence")
        if array.ndim != 2 or array.shape[0] != len(tokens):
            raise EmbeddingError("vectors must be one equal-dimension row per token")
        norms = np.linalg.norm(array, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise EmbeddingError("zero-norm embedding vector")
        return cls(tokens=tuple(tokens), vectors=array / norms)


@dataclass(frozen=True)
class MatchScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MatchCandidate:
    """A scored (reference, candidate) pair."""

    reference: str
    candidate: str
    precision: float
    recall: float
    f1: float


def bertscore(ref: TokenEmbeddingSeq, cand: TokenEmbeddingSeq) -> MatchScores:
    """Greedy token-matching scores between two embedded sequences.

    Recall is the mean over reference tokens of the best cosine similarity
    to any candidate token; precision is the symmetric quantity over
    candidate tokens; F1 is their harmonic mean (0 when P + R <= 0).
    Vectors are unit-normalized, so cosine similarity is the dot product.
    """
    similarity = ref.vectors @ cand.vectors.T
    recall = float(similarity.max(axis=1).mean())
    precision = float(similarity.max(axis=0).mean())
    total = precision + recall
    f1 = 2.0 * precision * recall / total if total > 0 else 0.0
    return MatchScores(precision=precision, recall=recall, f1=f1)


class EmbeddingBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddingSeq]:
        """Return one token-embedding sequence per input text."""


_TOKEN_RE = re.compile(r"[a-z0-9]+")


class HashEmbedder:
    """Deterministic offline embedder.

    Tokenizes on non-alphanumeric boundaries (lowercased) and maps each
    token to a pseudo-random unit vector seeded by a stable hash of the
    token string, so identical strings embed identically across runs,
    platforms, and process boundaries.
    """

    def __init__(self, dim: int = 32, seed: int = 0):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is None:
            digest = hashlib.sha256(f"{self.seed}|{token}".encode("utf-8")).digest()
            state = np.random.RandomState(int.from_bytes(digest[:4], "big"))
            raw = state.standard_normal(self.dim)
            cached = raw / np.linalg.norm(raw)
            self._cache[token] = cached
        return cached

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddingSeq]:
        sequences = []
        for text in texts:
            tokens = _TOKEN_RE.findall(text.lower())
            if not tokens:
                raise EmbeddingError(f"text has no embeddable tokens: {text!r}")
            vectors = np.stack([self._vector(tok) for tok in tokens])
            sequences.append(TokenEmbeddingSeq(tokens=tuple(tokens), vectors=vectors))
        return sequences


class RemoteEmbedder:
    """HTTP client for a token-embedding service.

    Protocol: POST {endpoint}/embed with body {"texts": [...]}; response
    {"tokens": [[...], ...], "vectors": [[[...], ...], ...]} parallel to
    the request texts. Unit normalization happens client-side.
    """

    def __init__(
        self,
        endpoint: str,
        session: requests.Session | None = None,
        timeout: float = 120.0,
        batch_size: int = 64,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.batch_size = batch_size
        self._session = session or requests.Session()

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddingSeq]:
        sequences: list[TokenEmbeddingSeq] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            response = self._session.post(
                f"{self.endpoint}/embed", json={"texts": chunk}, timeout=self.timeout
            )
            if response.status_code != 200:
                raise EmbeddingError(
                    f"embed returned HTTP {response.status_code}: {response.text[:200]}"
                )
            body = response.json()
            tokens = body.get("tokens")
            vectors = body.get("vectors")
            if (
                not isinstance(tokens, list)
                or not isinstance(vectors, list)
                or len(tokens) != len(chunk)
                or len(vectors) != len(chunk)
            ):
                raise EmbeddingError("malformed response: arrays not parallel to texts")
            for text_tokens, text_vectors in zip(tokens, vectors):
                sequences.append(TokenEmbeddingSeq.from_raw(text_tokens, text_vectors))
        return sequences


def rank_candidates(
    reference: str,
    candidates: Sequence[str],
    embedder: EmbeddingBackend,
    k: int,
) -> list[MatchCandidate]:
    """Top-k candidates by F1 against the reference.

    Duplicate candidate strings are collapsed before scoring. The ordering
    is deterministic and independent of candidate input order: F1
    descending, ties broken by candidate text ascending.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not candidates:
        raise ValueError("candidates must be non-empty")
    unique = sorted(set(candidates))
    embedded = embedder.embed([reference, *unique])
    ref_seq, cand_seqs = embedded[0], embedded[1:]
    scored = []
    for candidate, cand_seq in zip(unique, cand_seqs):
        scores = bertscore(ref_seq, cand_seq)
        scored.append(
            MatchCandidate(
                reference=reference,
                candidate=candidate,
                precision=scores.precision,
                recall=scores.recall,
                f1=scores.f1,
            )
        )
    scored.sort(key=lambda c: (-c.f1, c.candidate))
    return scored[:k]


@dataclass(frozen=True)
class SheetRow:
    """One annotation unit: a reference and its top-ranked candidates."""

    reference: str
    context: str
    candidates: tuple[MatchCandidate, ...]
    label: str = UNSET_LABEL


@dataclass
class AnnotationSheet:
    """Rows awaiting (or carrying) human strong/weak/none labels."""

    rows: list[SheetRow] = field(default_factory=list)
    skipped: list[tuple[str, str, str]] = field(default_factory=list)

    def with_labels(self, labels: Sequence[str]) -> "AnnotationSheet":
        if len(labels) != len(self.rows):
            raise ValueError("one label per row required")
        rows = [replace(row, label=label) for row, label in zip(self.rows, labels)]
        return AnnotationSheet(rows=rows, skipped=list(self.skipped))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(SHEET_HEADER_COMMENT)
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SHEET_COLUMNS)
            for row in self.rows:
                cells: list[str] = [row.reference, row.context]
                for i in range(3):
                    if i < len(row.candidates):
                        cells.append(row.candidates[i].candidate)
                        cells.append(f"{row.candidates[i].f1:.6f}")
                    else:
                        cells.extend(["", ""])
                cells.append(row.label)
                writer.writerow(cells)

    @classmethod
    def read_csv(cls, path: str | Path) -> "AnnotationSheet":
        rows: list[SheetRow] = []
        with open(path, "r", encoding="utf-8", newline="") as handle:
            lines = [line for line in handle if not line.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader, None)
        if header != SHEET_COLUMNS:
            raise ValueError(f"unexpected sheet columns: {header}")
        for cells in reader:
            if not cells:
                continue
            reference, context = cells[0], cells[1]
            candidates = []
            for i in range(3):
                text, f1 = cells[2 + 2 * i], cells[3 + 2 * i]
                if text:
                    candidates.append(
                        MatchCandidate(
                            reference=reference,
                            candidate=text,
                            precision=float("nan"),
                            recall=float("nan"),
                            f1=float(f1),
                        )
                    )
            rows.append(
                SheetRow(
                    reference=reference,
                    context=context,
                    candidates=tuple(candidates),
                    label=cells[8].strip().lower(),
                )
            )
        return cls(rows=rows)


SHEET_COLUMNS = [
    "reference",
    "context",
    "cand1",
    "f1_1",
    "cand2",
    "f1_2",
    "cand3",
    "f1_3",
    "label",
]

SHEET_HEADER_COMMENT = (
    "# Label each row in the 'label' column with one of: strong, weak, none.\n"
    "#   strong: the candidate asks the same question as the reference.\n"
    "#   weak:   the candidate is broader, but its answer would contain the\n"
    "#           reference's answer.\n"
    "#   none:   neither of the above.\n"
    "# Judge the row by the best of its (up to) three candidates.\n"
)


def _build_rows(
    items: Iterable[tuple[str, str, Sequence[str]]],
    embedder: EmbeddingBackend,
    k: int,
    checkpoint_path: str | Path | None,
) -> AnnotationSheet:
    sheet = AnnotationSheet()
    for reference, context, candidates in items:
        usable = [c for c in candidates if c.strip()]
        if not usable:
            sheet.skipped.append((reference, context, "no candidate questions"))
            continue
        try:
            ranked = rank_candidates(reference, usable, embedder, k)
        except (EmbeddingError, requests.RequestException):
            if checkpoint_path is not None:
                sheet.write_csv(checkpoint_path)
            raise
        sheet.rows.append(
            SheetRow(reference=reference, context=context, candidates=tuple(ranked))
        )
    return sheet


def per_document_experiment(
    gold: Sequence[tuple[str, str]],
    questions_by_doc: Mapping[str, Sequence[str]],
    embedder: EmbeddingBackend,
    k: int = 3,
    checkpoint_path: str | Path | None = None,
) -> AnnotationSheet:
    """Rank each document's own generated questions against its gold question.

    ``gold`` pairs are (reference question, doc_id); candidates for a row
    are drawn only from that document's generations. Gold documents with no
    generated questions are recorded as skipped and excluded from the sheet.
    """

    def items():
        for reference, doc_id in gold:
            yield reference, doc_id, list(questions_by_doc.get(doc_id, ()))

    sheet = _build_rows(items(), embedder, k, checkpoint_path)
    known = set(questions_by_doc)
    sheet.skipped = [
        (ref, ctx, "document not in corpus" if ctx not in known else reason)
        for ref, ctx, reason in sheet.skipped
    ]
    return sheet


def frequent_question_experiment(
    gold: Sequence[str],
    frequent: Sequence[FrequencyEntry],
    embedder: EmbeddingBackend,
    k: int = 3,
    checkpoint_path: str | Path | None = None,
) -> AnnotationSheet:
    """Rank the corpus-level frequent questions against each gold question."""
    if not frequent:
        raise ValueError("frequent entries must be non-empty")
    candidates = [entry.question for entry in frequent]
    return _build_rows(
        ((reference, "corpus", candidates) for reference in gold),
        embedder,
        k,
        checkpoint_path,
    )


def _round_half_up(value: Fraction) -> int:
    return int(math.floor(value + Fraction(1, 2)))


@dataclass(frozen=True)
class AnnotationSummary:
    """Label tallies for a completed sheet; match = strong + weak."""

    total: int
    strong: int
    weak: int
    none: int

    @property
    def match(self) -> int:
        return self.strong + self.weak

    def percent(self, which: str) -> Fraction:
        count = {"strong": self.strong, "weak": self.weak, "none": self.none, "match": self.match}[which]
        if self.total == 0:
            return Fraction(0)
        return Fraction(100 * count, self.total)

    def display_percent(self, which: str) -> int:
        """Percentage rounded half-up to the nearest integer, for display."""
        return _round_half_up(self.percent(which))

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "strong": self.strong,
            "weak": self.weak,
            "none": self.none,
            "match": self.match,
            "percent_exact": {
                which: str(self.percent(which)) for which in ("strong", "weak", "none", "match")
            },
            "percent_display": {
                which: self.display_percent(which) for which in ("strong", "weak", "none", "match")
            },
        }


def summarize_annotations(sheet: AnnotationSheet) -> AnnotationSummary:
    """Tally labels of a completed sheet; unset rows are an error."""
    unset = [i + 1 for i, row in enumerate(sheet.rows) if row.label not in LABELS]
    if unset:
        raise ValueError(f"rows without a valid label: {unset}")
    strong = sum(1 for row in sheet.rows if row.label == "strong")
    weak = sum(1 for row in sheet.rows if row.label == "weak")
    none_count = sum(1 for row in sheet.rows if row.label == "none")
    return AnnotationSummary(
        total=len(sheet.rows), strong=strong, weak=weak, none=none_count
    )
