"""Text cleanup, sentence splitting, and sliding-window span extraction.

Documents are reduced to natural-language text (emails, URLs, DOIs, citation
tags and section numbers stripped), split into sentences with a rule-based
tokenizer, and grouped into overlapping windows of sentences. Each window is
the unit of text handed to the question-generation backend.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .ingest import Document

__all__ = [
    "WindowConfig",
    "SentenceSpan",
    "clean_text",
    "split_sentences",
    "window_spans",
    "document_spans",
]

_EMAIL_RE = re.compile(r"\S+@\S+\.\S+")
_URL_RE = re.compile(r"https?://\S+|www\.\S+")
_DOI_RE = re.compile(r"(?:doi:\s*)?10\.\d{4,9}/\S+", re.IGNORECASE)
_CITATION_RE = re.compile(r"\[\d+(?:\s*,\s*\d+)*\]")
_SECTION_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)*\s+", re.MULTILINE)
# Sentence punctuation that commonly trails a URL/DOI/email belongs to the
# surrounding sentence, not the artifact itself; keep it.
_TRAILING_PUNCT_RE = re.compile(r"[)\].,;:!?'\"]+$")


def _drop_keep_trailing_punct(match: re.Match) -> str:
    tail = _TRAILING_PUNCT_RE.search(match.group())
    return tail.group() if tail else ""


def _clean_once(text: str) -> str:
    text = _SECTION_NUMBER_RE.sub("", text)
    text = _EMAIL_RE.sub(_drop_keep_trailing_punct, text)
    text = _URL_RE.sub(_drop_keep_trailing_punct, text)
    text = _DOI_RE.sub(_drop_keep_trailing_punct, text)
    text = _CITATION_RE.sub("", text)
    return " ".join(text.split())


def clean_text(raw: str) -> str:
    """Delete non-natural-language artifacts and collapse whitespace.

    Removes email addresses, URLs, DOI strings, bracketed citation tags such
    as ``[12]`` or ``[3, 5]``, and line-leading section numbers such as
    ``2.1.3 ``. Only deletes content; never introduces new non-whitespace
    characters. Applied to a fixed point so the result is stable under
    re-cleaning.
    """
    text = raw
    while True:
        cleaned = _clean_once(text)
        if cleaned == text:
            return cleaned
        text = cleaned


_TERMINATORS = frozenset(".?!")

# Tokens after which a terminator does not end a sentence. Multi-word entries
# are matched against the last two whitespace-separated tokens.
_ABBREVIATIONS = frozenset(
    {
        "fig.", "figs.", "tab.", "eq.", "eqs.", "sec.", "ref.", "refs.",
        "no.", "vol.", "pp.", "ca.", "cf.", "vs.", "etc.", "e.g.", "i.e.",
        "et al.", "al.", "approx.", "resp.",
        "dr.", "prof.", "mr.", "mrs.", "ms.", "st.", "jr.", "sr.", "inc.", "ltd.",
    }
)


def _split_guarded(text: str, term_index: int) -> bool:
    """True when the terminator at term_index must not end a sentence."""
    start = term_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start : term_index + 1].lower()
    if token in _ABBREVIATIONS:
        return True
    # Single-letter tokens are initials ("J. Smith") or list markers ("a.").
    bare = token[:-1]
    if len(bare) == 1 and bare.isalpha():
        return True
    # Two-word abbreviations such as "et al."
    prev_end = start - 1
    while prev_end > 0 and text[prev_end - 1].isspace():
        prev_end -= 1
    prev_start = prev_end
    while prev_start > 0 and not text[prev_start - 1].isspace():
        prev_start -= 1
    if prev_end > prev_start:
        two_word = f"{text[prev_start:prev_end].lower()} {token}"
        if two_word in _ABBREVIATIONS:
            return True
    return False


def split_sentences(text: str) -> list[str]:
    """Split text into sentences with a deterministic rule set.

    A sentence ends at ``.``, ``?`` or ``!`` followed by whitespace and an
    uppercase letter or digit, unless the preceding token is a known
    abbreviation or a single letter. Each returned sentence has internal
    whitespace collapsed; joining the result with single spaces preserves
    all non-whitespace content of the input.
    """
    stripped = text.strip()
    if not stripped:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(stripped)
    while i < n:
        if stripped[i] in _TERMINATORS:
            j = i + 1
            while j < n and stripped[j].isspace():
                j += 1
            follows_gap = j > i + 1
            starts_new = j < n and (stripped[j].isupper() or stripped[j].isdigit())
            if follows_gap and starts_new and not _split_guarded(stripped, i):
                sentences.append(" ".join(stripped[start : i + 1].split()))
                start = j
                i = j
                continue
        i += 1
    tail = " ".join(stripped[start:].split())
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class WindowConfig:
    """Sliding-window parameters for span extraction."""

    window_size: int = 10
    stride: int = 5
    min_sentences_per_passage: int = 2

    def __post_init__(self) -> None:
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if not 1 <= self.stride <= self.window_size:
            raise ValueError("stride must satisfy 1 <= stride <= window_size")
        if self.min_sentences_per_passage < 0:
            raise ValueError("min_sentences_per_passage must be >= 0")


@dataclass(frozen=True)
class SentenceSpan:
    """A contiguous window of sentences with provenance."""

    doc_id: str
    span_index: int
    sentence_start: int
    sentence_end: int
    text: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "span_index": self.span_index,
            "sentence_start": self.sentence_start,
            "sentence_end": self.sentence_end,
            "text": self.text,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SentenceSpan":
        return cls(
            doc_id=obj["doc_id"],
            span_index=int(obj["span_index"]),
            sentence_start=int(obj["sentence_start"]),
            sentence_end=int(obj["sentence_end"]),
            text=obj["text"],
        )


def window_spans(
    sentences: Sequence[str], cfg: WindowConfig, doc_id: str
) -> list[SentenceSpan]:
    """Group sentences into overlapping windows.

    Windows start at offsets 0, stride, 2*stride, ... and cover up to
    window_size sentences, clipped to the end of the list. Emission stops
    with the first window that reaches the final sentence, so no window is a
    subset of its predecessor. Inputs shorter than min_sentences_per_passage
    produce no spans.
    """
    n = len(sentences)
    if n == 0 or n < cfg.min_sentences_per_passage:
        return []
    spans: list[SentenceSpan] = []
    offset = 0
    index = 0
    while True:
        end = min(offset + cfg.window_size, n)
        spans.append(
            SentenceSpan(
                doc_id=doc_id,
                span_index=index,
                sentence_start=offset,
                sentence_end=end,
                text=" ".join(sentences[offset:end]),
            )
        )
        if end >= n:
            return spans
        offset += cfg.stride
        index += 1


def document_spans(doc: "Document", cfg: WindowConfig) -> list[SentenceSpan]:
    """Clean, sentence-split and window one document.

    Passages with fewer than min_sentences_per_passage sentences are dropped
    (they are usually section headings); the surviving passages' sentences
    are concatenated in order and windowed across passage boundaries.
    """
    sentences: list[str] = []
    for passage in doc.passages:
        passage_sentences = split_sentences(clean_text(passage))
        if len(passage_sentences) >= cfg.min_sentences_per_passage:
            sentences.extend(passage_sentences)
    return window_spans(sentences, cfg, doc.doc_id)
