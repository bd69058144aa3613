"""Whole-sentence plus per-mention query generation."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import LocalSentence


class QueryKind(enum.Enum):
    WHOLE_SENTENCE = "sentence"
    MENTION = "mention"


@dataclass(frozen=True)
class Query:
    text: str
    kind: QueryKind
    mention_index: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("query text is empty")
        if (self.kind is QueryKind.MENTION) != (self.mention_index is not None):
            raise ValueError("mention_index must be set exactly for mention queries")

    @property
    def normalized(self) -> str:
        """Lowercased single-spaced form used by local indexes."""
        return " ".join(self.text.lower().split())


def generate_queries(sentence: LocalSentence) -> list[Query]:
    """The sentence itself, then one query per distinct mention surface string.

    Repeats are detected case-insensitively; the first occurrence wins.
    """
    whole = Query(" ".join(sentence.text.split()), QueryKind.WHOLE_SENTENCE)
    queries = [whole]
    seen = {whole.normalized}
    for idx, span in enumerate(sentence.mentions):
        q = Query(sentence.mention_text(span), QueryKind.MENTION, idx)
        if q.normalized not in seen:
            seen.add(q.normalized)
            queries.append(q)
    return queries
