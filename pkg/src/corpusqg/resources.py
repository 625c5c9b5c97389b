"""Bundled word lists, pinned so downstream counts are reproducible."""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

# Checksum of data/stopwords.txt. Vocabulary construction depends on the exact
# list contents, so any edit must update this pin (see test_topics.py).
STOPWORDS_SHA256 = "73804769a098558757cde89333e47b2c9a39733b3540dc724d1bd981f49943b8"


def _read_data_text(name: str) -> str:
    return resources.files("corpusqg.data").joinpath(name).read_text(encoding="utf-8")


def stopwords_checksum() -> str:
    return hashlib.sha256(_read_data_text("stopwords.txt").encode("utf-8")).hexdigest()


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    """English stopword list used by vocabulary building and the mock generator."""
    words = [w.strip() for w in _read_data_text("stopwords.txt").splitlines()]
    return frozenset(w for w in words if w)


@lru_cache(maxsize=None)
def load_publisher_names() -> tuple[str, ...]:
    """Default publisher-name ban list; callers may replace it per corpus."""
    names = [w.strip() for w in _read_data_text("publishers.txt").splitlines()]
    return tuple(n for n in names if n)
