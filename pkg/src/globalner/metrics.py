"""Entity-level micro precision / recall / F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import bio_decode, parse_labels


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    n_pred: int
    n_gold: int


def entities(labels: Sequence[str]) -> set[tuple[int, int, str | None]]:
    return {(s.token_start, s.token_end, t) for s, t in bio_decode(parse_labels(labels))}


def micro_prf(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> PRF:
    """Exact (span, type) matches pooled over all sentences; empty denominators give 0."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    tp = n_pred = n_gold = 0
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {i}: {len(g)} gold labels vs {len(p)} predicted")
        ge, pe = entities(g), entities(p)
        tp += len(ge & pe)
        n_gold += len(ge)
        n_pred += len(pe)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1, tp, n_pred, n_gold)
