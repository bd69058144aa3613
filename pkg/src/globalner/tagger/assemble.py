from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import LocalSentence, ReferenceSentence, Token
from ..reranker import ScoredReference

CLS = Token("[C]", 0, 3)
SEP = Token("[S]", 0, 3)
DEFAULT_BUDGET = 510


@dataclass(frozen=True)
class AssembledInput:
    """``[C] local... [S] references...`` with a mask selecting the local tokens."""

    tokens: tuple[Token, ...]
    mask: tuple[bool, ...]
    local_range: range

    def __post_init__(self):
        if len(self.tokens) != len(self.mask):
            raise ValueError("mask length differs from token count")
        if self.tokens[0] is not CLS and self.tokens[0] != CLS:
            raise ValueError("assembled input must start with the [C] marker")
        if sum(self.mask) != len(self.local_range):
            raise ValueError("mask does not match the local range")

    def __len__(self):
        return len(self.tokens)

    @property
    def has_references(self) -> bool:
        return len(self.tokens) > self.local_range.stop

    @property
    def reference_range(self) -> range:
        """Positions of reference tokens (after the [S] marker)."""
        if not self.has_references:
            return range(self.local_range.stop, self.local_range.stop)
        return range(self.local_range.stop + 1, len(self.tokens))

    @property
    def mask_array(self) -> np.ndarray:
        return np.array(self.mask, dtype=bool)


def assemble_masked_input(local: LocalSentence,
                          selected: Sequence[ScoredReference | ReferenceSentence],
                          budget: int = DEFAULT_BUDGET) -> AssembledInput:
    """Concatenate references in rank order after the local sentence.

    Reference tokens beyond ``budget`` total positions are dropped from the
    tail. The [S] marker is only emitted when at least one reference token
    survives.
    """
    n = len(local.tokens)
    if budget < n + 1:
        raise ValueError(f"budget {budget} cannot hold the local sentence ({n} tokens + [C])")
    ref_tokens: list[Token] = []
    for item in selected:
        ref = item.reference if isinstance(item, ScoredReference) else item
        ref_tokens.extend(ref.tokens)
    room = budget - (n + 2)
    ref_tokens = ref_tokens[:max(room, 0)]
    tokens = [CLS, *local.tokens]
    mask = [False] + [True] * n
    if ref_tokens:
        tokens += [SEP, *ref_tokens]
        mask += [False] * (len(ref_tokens) + 1)
    return AssembledInput(tuple(tokens), tuple(mask), range(1, n + 1))
