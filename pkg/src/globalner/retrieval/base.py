from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Iterable, Protocol

from ..core import ReferenceSentence, SourceTag
from ..queries import Query

DEFAULT_BLOCKED_DOMAINS = ("github.com",)
# Inline BIO annotations ("B-location", "I-person") and CoNLL-style "word\tB-x" rows.
DEFAULT_ANNOTATION_PATTERNS = (
    r"(?<![\w-])[BI]-[A-Za-z][\w-]*",
    r"\t[BIO](?:-\w+)?\b",
)


@dataclass
class RetrievalConfig:
    top_g: int = 15
    top_w: int = 6
    top_r: int = 15
    k_clusters: int = 5
    blocked_domains: list[str] = field(default_factory=lambda: list(DEFAULT_BLOCKED_DOMAINS))
    annotation_patterns: list[str] = field(default_factory=lambda: list(DEFAULT_ANNOTATION_PATTERNS))

    def __post_init__(self):
        for name in ("top_g", "top_w", "top_r", "k_clusters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for pat in self.annotation_patterns:
            re.compile(pat)


class SearchBackend(Protocol):
    source: SourceTag
    top_k: int

    def search(self, query: Query, top_k: int | None = None) -> list[ReferenceSentence]: ...


_STRIP = string.punctuation + string.whitespace


def normalize_text(text: str) -> str:
    """Lowercase, collapse whitespace, strip surrounding punctuation."""
    return " ".join(text.lower().split()).strip(_STRIP)


def merge_dedup(results: Iterable[ReferenceSentence]) -> list[ReferenceSentence]:
    """Drop duplicate texts, keeping the most trusted copy at the first position seen.

    Trust order is Wikipedia > source corpus > Internet; equal trust keeps the
    earliest copy.
    """
    slots: dict[str, ReferenceSentence] = {}
    for ref in results:
        key = normalize_text(ref.raw_text)
        held = slots.get(key)
        if held is None or ref.source.trust_rank < held.source.trust_rank:
            slots[key] = ref
    return list(slots.values())
