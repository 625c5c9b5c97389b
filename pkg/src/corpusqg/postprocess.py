"""Boilerplate filtering and question-string normalization.

Generated questions that mention publishers or preprint/copyright language
are dropped; survivors are normalized into stable aggregation keys.
Normalization is deliberately light (case and whitespace only) so that
surface variants such as "covid 19" and "covid-19" stay distinct, matching
how counts are reported downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .qg import QuestionRecord
from .resources import load_publisher_names

__all__ = [
    "FilterConfig",
    "FilterSummary",
    "filter_questions",
    "normalize_question",
    "load_banned_terms",
]


@dataclass(frozen=True)
class FilterConfig:
    """Case-insensitive substring ban lists for generated questions."""

    banned_substrings: tuple[str, ...] = ("preprint", "copyright")
    banned_publisher_names: tuple[str, ...] = field(default_factory=load_publisher_names)

    def __post_init__(self) -> None:
        object.__setattr__(self, "banned_substrings", tuple(self.banned_substrings))
        object.__setattr__(
            self, "banned_publisher_names", tuple(self.banned_publisher_names)
        )
        if any(not t for t in self.banned_substrings + self.banned_publisher_names):
            raise ValueError("banned term entries must be non-empty")

    @property
    def all_terms(self) -> tuple[str, ...]:
        return tuple(
            t.lower() for t in self.banned_substrings + self.banned_publisher_names
        )


@dataclass
class FilterSummary:
    kept: int = 0
    dropped: int = 0


def filter_questions(
    records: Iterable[QuestionRecord],
    cfg: FilterConfig | None = None,
    summary: FilterSummary | None = None,
) -> Iterator[QuestionRecord]:
    """Drop records whose question contains any banned term; order preserved."""
    cfg = cfg if cfg is not None else FilterConfig()
    terms = cfg.all_terms
    for record in records:
        lowered = record.question.lower()
        if any(term in lowered for term in terms):
            if summary is not None:
                summary.dropped += 1
            continue
        if summary is not None:
            summary.kept += 1
        yield record


_WHITESPACE_RE = re.compile(r"\s+")


def normalize_question(question: str, aggressive: bool = False) -> str:
    """Normalize a question into an aggregation key.

    Lowercases, collapses whitespace runs to single spaces, and trims.
    All other punctuation (hyphens, trailing "?") is preserved so that
    distinct surface forms stay distinct. The aggressive mode additionally
    maps hyphens to spaces and strips a trailing question mark; it is off
    by default.
    """
    text = question.lower()
    if aggressive:
        text = text.replace("-", " ")
    text = _WHITESPACE_RE.sub(" ", text).strip()
    if aggressive:
        text = text.rstrip("?").rstrip()
    return text


def load_banned_terms(path: str | Path) -> tuple[str, ...]:
    """Read a newline-separated ban list (replaces the shipped defaults)."""
    with open(path, "r", encoding="utf-8") as handle:
        terms = [line.strip() for line in handle]
    return tuple(t for t in terms if t)
