"""Question generation over sentence spans.

Backends sit behind a small batch interface: a remote HTTP service for real
model inference and a deterministic mock for tests and offline runs. The
driver batches spans, keeps a bounded number of requests in flight, and
emits records strictly in input order so runs are reproducible regardless
of completion timing.
"""

from __future__ import annotations

import json
import logging
import re
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol, Sequence

import requests

from .preprocess import SentenceSpan
from .resources import load_stopwords

logger = logging.getLogger(__name__)

__all__ = [
    "GenerationConfig",
    "QuestionRecord",
    "GenerationSummary",
    "BackendError",
    "GenerationBackend",
    "MockBackend",
    "RemoteBackend",
    "mock_generate",
    "generate",
    "write_question_records",
    "read_question_records",
]

FALLBACK_QUESTION = "what is this text about"


class BackendError(RuntimeError):
    """The generation backend failed beyond the retry budget."""


@dataclass(frozen=True)
class GenerationConfig:
    """Decoding and throughput knobs for question generation."""

    beams: int = 4
    max_question_tokens: int = 64
    questions_per_span: int = 1
    endpoint: str | None = None
    batch_size: int = 16
    max_inflight_requests: int = 4
    max_retries: int = 3
    retry_backoff_seconds: float = 0.5

    def __post_init__(self) -> None:
        if self.beams < 1:
            raise ValueError("beams must be >= 1")
        if self.questions_per_span < 1:
            raise ValueError("questions_per_span must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_inflight_requests < 1:
            raise ValueError("max_inflight_requests must be >= 1")


@dataclass(frozen=True)
class QuestionRecord:
    """One generated question tied to its source span."""

    question: str
    doc_id: str
    span_index: int
    publish_date: date | None
    backend_id: str

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValueError("question must be non-empty after trimming")

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "doc_id": self.doc_id,
            "span_index": self.span_index,
            "publish_date": self.publish_date.isoformat() if self.publish_date else None,
            "backend_id": self.backend_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuestionRecord":
        raw_date = obj.get("publish_date")
        return cls(
            question=obj["question"],
            doc_id=obj["doc_id"],
            span_index=int(obj["span_index"]),
            publish_date=date.fromisoformat(raw_date) if raw_date else None,
            backend_id=obj.get("backend_id", ""),
        )


@dataclass
class GenerationSummary:
    """Run counters, merged associatively across batches."""

    spans_in: int = 0
    records_out: int = 0
    failures: int = 0
    failed_spans: list[tuple[str, int, str]] = field(default_factory=list)


class GenerationBackend(Protocol):
    backend_id: str

    def generate_batch(
        self, texts: Sequence[str], cfg: GenerationConfig
    ) -> list[list[str]]:
        """Return cfg.questions_per_span questions per input text."""


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def mock_generate(text: str, stopwords: frozenset[str] | None = None) -> str:
    """Deterministic stand-in for model generation.

    Returns "what is X" where X is the lexicographically smallest among the
    most frequent non-stopword unigrams of the lowercased text; a fixed
    fallback when only stopwords remain.
    """
    questions = _mock_questions(text, 1, stopwords)
    return questions[0]


def _mock_questions(
    text: str, count: int, stopwords: frozenset[str] | None = None
) -> list[str]:
    stopwords = load_stopwords() if stopwords is None else stopwords
    counts = Counter(
        token for token in _TOKEN_RE.findall(text.lower()) if token not in stopwords
    )
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    questions = [f"what is {token}" for token, _ in ranked[:count]]
    while len(questions) < count:
        questions.append(FALLBACK_QUESTION)
    return questions


class MockBackend:
    """Offline backend producing bit-deterministic questions."""

    backend_id = "mock"

    def __init__(self, stopwords: frozenset[str] | None = None):
        self._stopwords = load_stopwords() if stopwords is None else stopwords

    def generate_batch(
        self, texts: Sequence[str], cfg: GenerationConfig
    ) -> list[list[str]]:
        return [
            _mock_questions(text, cfg.questions_per_span, self._stopwords)
            for text in texts
        ]


class RemoteBackend:
    """HTTP client for a question-generation service.

    Protocol: POST {endpoint}/generate with body
    {"texts": [...], "beams": int, "max_tokens": int, "num_return": int};
    response {"questions": [[...], ...]} parallel to the request texts.
    """

    backend_id = "remote"

    def __init__(
        self,
        endpoint: str,
        session: requests.Session | None = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()

    def generate_batch(
        self, texts: Sequence[str], cfg: GenerationConfig
    ) -> list[list[str]]:
        payload = {
            "texts": list(texts),
            "beams": cfg.beams,
            "max_tokens": cfg.max_question_tokens,
            "num_return": cfg.questions_per_span,
        }
        response = self._session.post(
            f"{self.endpoint}/generate", json=payload, timeout=self.timeout
        )
        if response.status_code != 200:
            raise BackendError(
                f"generate returned HTTP {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        questions = body.get("questions")
        if not isinstance(questions, list) or len(questions) != len(texts):
            raise BackendError("malformed response: 'questions' not parallel to 'texts'")
        return questions


def _call_with_retry(
    backend: GenerationBackend, texts: Sequence[str], cfg: GenerationConfig
) -> list[list[str]]:
    attempts = cfg.max_retries + 1
    for attempt in range(attempts):
        try:
            return backend.generate_batch(texts, cfg)
        except (requests.RequestException, BackendError) as exc:
            if attempt == attempts - 1:
                raise BackendError(
                    f"backend failed after {attempts} attempts: {exc}"
                ) from exc
            logger.warning(
                "generation batch failed (attempt %d/%d): %s", attempt + 1, attempts, exc
            )
            if cfg.retry_backoff_seconds:
                time.sleep(cfg.retry_backoff_seconds * (attempt + 1))
    raise AssertionError("unreachable")


def _batches(spans: Iterable[SentenceSpan], size: int) -> Iterator[list[SentenceSpan]]:
    batch: list[SentenceSpan] = []
    for span in spans:
        batch.append(span)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def generate(
    spans: Iterable[SentenceSpan],
    cfg: GenerationConfig,
    backend: GenerationBackend,
    dates: Mapping[str, date | None] | None = None,
    summary: GenerationSummary | None = None,
) -> Iterator[QuestionRecord]:
    """Generate questions for spans, in input order.

    Up to cfg.max_inflight_requests batches run concurrently; results are
    re-ordered to input order before emission, so output is deterministic
    for a deterministic backend. Spans whose generation comes back blank
    are retried individually and then skipped, with provenance recorded in
    the summary.
    """
    summary = summary if summary is not None else GenerationSummary()
    with ThreadPoolExecutor(max_workers=cfg.max_inflight_requests) as pool:
        pending: deque = deque()

        def drain_one() -> Iterator[QuestionRecord]:
            batch, future = pending.popleft()
            yield from _emit_batch(batch, future.result(), cfg, backend, dates, summary)

        for batch in _batches(spans, cfg.batch_size):
            summary.spans_in += len(batch)
            texts = [span.text for span in batch]
            pending.append((batch, pool.submit(_call_with_retry, backend, texts, cfg)))
            if len(pending) >= cfg.max_inflight_requests:
                yield from drain_one()
        while pending:
            yield from drain_one()


def _emit_batch(
    batch: Sequence[SentenceSpan],
    results: list[list[str]],
    cfg: GenerationConfig,
    backend: GenerationBackend,
    dates: Mapping[str, date | None] | None,
    summary: GenerationSummary,
) -> Iterator[QuestionRecord]:
    for span, questions in zip(batch, results):
        cleaned = [q.strip() for q in questions if isinstance(q, str) and q.strip()]
        if len(cleaned) < cfg.questions_per_span:
            retried = _retry_span(span, cfg, backend)
            if len(retried) > len(cleaned):
                cleaned = retried
        if len(cleaned) < cfg.questions_per_span:
            missing = cfg.questions_per_span - len(cleaned)
            summary.failures += missing
            summary.failed_spans.append(
                (span.doc_id, span.span_index, "blank or missing generation")
            )
            logger.warning(
                "span %s/%d: %d generation(s) missing after retries",
                span.doc_id,
                span.span_index,
                missing,
            )
        publish_date = dates.get(span.doc_id) if dates else None
        for question in cleaned[: cfg.questions_per_span]:
            summary.records_out += 1
            yield QuestionRecord(
                question=question,
                doc_id=span.doc_id,
                span_index=span.span_index,
                publish_date=publish_date,
                backend_id=backend.backend_id,
            )


def _retry_span(
    span: SentenceSpan, cfg: GenerationConfig, backend: GenerationBackend
) -> list[str]:
    best: list[str] = []
    for _ in range(cfg.max_retries):
        try:
            questions = backend.generate_batch([span.text], cfg)[0]
        except (requests.RequestException, BackendError):
            continue
        cleaned = [q.strip() for q in questions if isinstance(q, str) and q.strip()]
        if len(cleaned) >= cfg.questions_per_span:
            return cleaned
        if len(cleaned) > len(best):
            best = cleaned
    return best


def write_question_records(records: Iterable[QuestionRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def read_question_records(path: str | Path) -> Iterator[QuestionRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield QuestionRecord.from_json(json.loads(line))
