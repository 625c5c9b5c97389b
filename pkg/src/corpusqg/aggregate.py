"""Frequency tables and time series over generated questions.

Counting is a commutative-monoid fold: shards can be counted independently
and merged in any order with identical results, which the tests exercise.
Every frequency entry carries both the number of source spans and the
number of distinct source documents, because ranking uses span counts while
relevance filtering uses document counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .qg import QuestionRecord

__all__ = [
    "FrequencyEntry",
    "FrequencyAccumulator",
    "TimeBucketSeries",
    "count_frequencies",
    "filter_by_doc_frequency",
    "keyword_group_series",
    "write_frequency_csv",
    "read_frequency_csv",
    "write_series_csv",
]


@dataclass(frozen=True)
class FrequencyEntry:
    """Aggregate counts for one normalized question."""

    question: str
    span_count: int
    doc_count: int

    def __post_init__(self) -> None:
        if not (self.span_count >= self.doc_count >= 1):
            raise ValueError("span_count >= doc_count >= 1 must hold")


class FrequencyAccumulator:
    """Mergeable question counter (span counts plus per-question doc-id sets)."""

    def __init__(self) -> None:
        self._span_counts: dict[str, int] = {}
        self._doc_ids: dict[str, set[str]] = {}

    def add(self, record: QuestionRecord) -> None:
        question = record.question
        self._span_counts[question] = self._span_counts.get(question, 0) + 1
        self._doc_ids.setdefault(question, set()).add(record.doc_id)

    def add_all(self, records: Iterable[QuestionRecord]) -> "FrequencyAccumulator":
        for record in records:
            self.add(record)
        return self

    def merge(self, other: "FrequencyAccumulator") -> "FrequencyAccumulator":
        for question, count in other._span_counts.items():
            self._span_counts[question] = self._span_counts.get(question, 0) + count
            self._doc_ids.setdefault(question, set()).update(other._doc_ids[question])
        return self

    def entries(self) -> list[FrequencyEntry]:
        """Sorted frequency table: span_count descending, then question ascending."""
        entries = [
            FrequencyEntry(
                question=question,
                span_count=count,
                doc_count=len(self._doc_ids[question]),
            )
            for question, count in self._span_counts.items()
        ]
        entries.sort(key=lambda e: (-e.span_count, e.question))
        return entries


def count_frequencies(records: Iterable[QuestionRecord]) -> list[FrequencyEntry]:
    """One entry per distinct question, in a deterministic total order."""
    return FrequencyAccumulator().add_all(records).entries()


def filter_by_doc_frequency(
    entries: Sequence[FrequencyEntry], min_docs: int
) -> list[FrequencyEntry]:
    """Keep entries generated from at least min_docs distinct documents."""
    if min_docs < 1:
        raise ValueError("min_docs must be >= 1")
    return [entry for entry in entries if entry.doc_count >= min_docs]


@dataclass(frozen=True)
class TimeBucketSeries:
    """Per-group counts bucketed by publication month.

    ``buckets`` covers the full month range of the dated input records with
    zero-filled gaps; records without a publish date are tallied separately
    in ``undated``.
    """

    label: str
    buckets: tuple[tuple[str, int], ...]
    undated: int = 0


def _month_key(value: date) -> tuple[int, int]:
    return (value.year, value.month)


def _iter_months(first: tuple[int, int], last: tuple[int, int]) -> Iterator[str]:
    year, month = first
    while (year, month) <= last:
        yield f"{year:04d}-{month:02d}"
        month += 1
        if month > 12:
            month = 1
            year += 1


def _strip_plural(token: str) -> str:
    if token.endswith("es") and len(token) > 3:
        return token[:-2]
    if token.endswith("s") and len(token) > 2:
        return token[:-1]
    return token


def _stem_text(text: str) -> str:
    return " ".join(_strip_plural(tok) for tok in text.lower().split())


def keyword_group_series(
    records: Iterable[QuestionRecord],
    groups: Mapping[str, Sequence[str]],
    bucket: str = "month",
    stem: bool = False,
) -> list[TimeBucketSeries]:
    """Count, per keyword group and publication month, the matching questions.

    A record matches a group when its question contains any of the group's
    phrases (case-insensitive substring); a question matching several groups
    is counted in each. With ``stem=True`` both phrases and questions have
    plural suffixes stripped per word before matching, so "treatments" also
    finds "treatment". The month range covers all dated input records.
    """
    if bucket not in ("month", "year"):
        raise ValueError("bucket must be 'month' or 'year'")

    phrase_sets = {
        label: [p.lower() for p in phrases] for label, phrases in groups.items()
    }
    if stem:
        phrase_sets = {
            label: [_stem_text(p) for p in phrases]
            for label, phrases in phrase_sets.items()
        }

    counts: dict[str, dict[tuple[int, int], int]] = {label: {} for label in groups}
    undated: dict[str, int] = {label: 0 for label in groups}
    date_range: list[tuple[int, int]] = []

    for record in records:
        question = record.question.lower()
        if stem:
            question = _stem_text(question)
        key = None
        if record.publish_date is not None:
            key = _month_key(record.publish_date)
            if bucket == "year":
                key = (key[0], 1)
            if not date_range:
                date_range = [key, key]
            else:
                date_range[0] = min(date_range[0], key)
                date_range[1] = max(date_range[1], key)
        for label, phrases in phrase_sets.items():
            if any(phrase in question for phrase in phrases):
                if key is None:
                    undated[label] += 1
                else:
                    counts[label][key] = counts[label].get(key, 0) + 1

    series: list[TimeBucketSeries] = []
    for label in groups:
        if not date_range:
            buckets: tuple[tuple[str, int], ...] = ()
        elif bucket == "year":
            years = range(date_range[0][0], date_range[1][0] + 1)
            buckets = tuple(
                (f"{year:04d}", counts[label].get((year, 1), 0)) for year in years
            )
        else:
            buckets = tuple(
                (month, counts[label].get(_parse_month(month), 0))
                for month in _iter_months(date_range[0], date_range[1])
            )
        series.append(TimeBucketSeries(label=label, buckets=buckets, undated=undated[label]))
    return series


def _parse_month(label: str) -> tuple[int, int]:
    year, month = label.split("-")
    return (int(year), int(month))


def write_frequency_csv(
    entries: Sequence[FrequencyEntry], path: str | Path, top: int | None = None
) -> int:
    """Write ``rank,question,span_count,doc_count`` rows; rank is 1-based."""
    rows = entries if top is None else entries[:top]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["rank", "question", "span_count", "doc_count"])
        for rank, entry in enumerate(rows, start=1):
            writer.writerow([rank, entry.question, entry.span_count, entry.doc_count])
    return len(rows)


def read_frequency_csv(path: str | Path) -> list[FrequencyEntry]:
    entries: list[FrequencyEntry] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            entries.append(
                FrequencyEntry(
                    question=row["question"],
                    span_count=int(row["span_count"]),
                    doc_count=int(row["doc_count"]),
                )
            )
    return entries


def write_series_csv(series: Sequence[TimeBucketSeries], path: str | Path) -> None:
    """Write ``group,month,count`` rows; the undated tally is a final
    per-group row with month ``undated``."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["group", "month", "count"])
        for entry in series:
            for month, count in entry.buckets:
                writer.writerow([entry.label, month, count])
            writer.writerow([entry.label, "undated", entry.undated])
