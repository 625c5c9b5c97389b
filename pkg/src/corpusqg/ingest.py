"""JSON-lines corpus loading and date/keyword filtering.

Corpus schema: one JSON object per line with fields ``doc_id`` (non-empty
string, unique), ``title`` (string), ``publish_date`` (``YYYY-MM-DD`` or
null), and ``passages`` (array of strings). Converting release-specific
corpus layouts into this schema is the job of external converter scripts.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

__all__ = [
    "Document",
    "CorpusFilter",
    "CorpusFormatError",
    "load_corpus",
    "filter_corpus",
    "write_corpus",
]


class CorpusFormatError(ValueError):
    """A corpus record violated the input schema (fatal in strict mode)."""


@dataclass(frozen=True)
class Document:
    """One corpus item: identifier, date, title, ordered passages."""

    doc_id: str
    title: str
    publish_date: date | None
    passages: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        object.__setattr__(self, "passages", tuple(self.passages))

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "publish_date": self.publish_date.isoformat() if self.publish_date else None,
            "passages": list(self.passages),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Document":
        if not isinstance(obj, dict):
            raise CorpusFormatError("record is not a JSON object")
        for key in ("doc_id", "title", "publish_date", "passages"):
            if key not in obj:
                raise CorpusFormatError(f"missing field {key!r}")
        doc_id = obj["doc_id"]
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusFormatError("doc_id must be a non-empty string")
        title = obj["title"]
        if not isinstance(title, str):
            raise CorpusFormatError("title must be a string")
        raw_date = obj["publish_date"]
        publish_date: date | None = None
        if raw_date is not None:
            if not isinstance(raw_date, str):
                raise CorpusFormatError("publish_date must be a YYYY-MM-DD string or null")
            try:
                publish_date = date.fromisoformat(raw_date)
            except ValueError as exc:
                raise CorpusFormatError(f"invalid publish_date {raw_date!r}") from exc
        passages = obj["passages"]
        if not isinstance(passages, list) or not all(isinstance(p, str) for p in passages):
            raise CorpusFormatError("passages must be an array of strings")
        return cls(doc_id=doc_id, title=title, publish_date=publish_date, passages=tuple(passages))


@dataclass(frozen=True)
class CorpusFilter:
    """Date/keyword corpus filter.

    A document is kept iff it has a publish date, the date is strictly after
    ``min_date``, and the keyword condition holds over title plus all
    passages (case-insensitive substring search). With an empty term list
    the keyword condition is vacuously false in ``any`` mode and vacuously
    true in ``all`` mode.
    """

    min_date: date
    keyword_terms: tuple[str, ...] = ()
    match_mode: str = "any"

    def __post_init__(self) -> None:
        object.__setattr__(self, "keyword_terms", tuple(self.keyword_terms))
        if self.match_mode not in ("any", "all"):
            raise ValueError("match_mode must be 'any' or 'all'")
        if any(not term for term in self.keyword_terms):
            raise ValueError("keyword_terms entries must be non-empty")

    def matches(self, doc: Document) -> bool:
        if doc.publish_date is None or doc.publish_date <= self.min_date:
            return False
        haystack = "\n".join((doc.title, *doc.passages)).lower()
        hits = (term.lower() in haystack for term in self.keyword_terms)
        return any(hits) if self.match_mode == "any" else all(hits)


def load_corpus(
    path: str | Path,
    strict: bool = False,
    issues: list[tuple[int, str]] | None = None,
) -> Iterator[Document]:
    """Yield Documents from a JSON-lines corpus file, preserving input order.

    In lenient mode (default) records failing schema validation are logged
    with their line number, appended to ``issues`` when given, and skipped;
    strict mode raises CorpusFormatError instead. An unreadable file raises
    OSError either way.
    """
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                _report(f"line {line_no}: invalid JSON ({exc.msg})", line_no, strict, issues)
                continue
            try:
                doc = Document.from_json(obj)
            except CorpusFormatError as exc:
                _report(f"line {line_no}: {exc}", line_no, strict, issues)
                continue
            if doc.doc_id in seen_ids:
                _report(f"line {line_no}: duplicate doc_id {doc.doc_id!r}", line_no, strict, issues)
                continue
            seen_ids.add(doc.doc_id)
            yield doc


def _report(
    message: str, line_no: int, strict: bool, issues: list[tuple[int, str]] | None
) -> None:
    if strict:
        raise CorpusFormatError(message)
    logger.warning("skipping corpus record: %s", message)
    if issues is not None:
        issues.append((line_no, message))


def filter_corpus(docs: Iterable[Document], corpus_filter: CorpusFilter) -> Iterator[Document]:
    """Keep documents matching the filter; order-preserving and idempotent."""
    for doc in docs:
        if corpus_filter.matches(doc):
            yield doc


def write_corpus(docs: Iterable[Document], path: str | Path) -> int:
    """Write documents as JSON lines; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for doc in docs:
            handle.write(json.dumps(doc.to_json(), ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count
