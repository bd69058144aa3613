"""MentionScore re-ranking: weighted recall over max-pooled token similarities.

For a local sentence with rows ``x_i`` and a reference with rows ``r_j``::

    R = sum_i alpha_i * max_j <x_i, r_j> / sum_i alpha_i

``alpha`` is all ones (plain BERTScore recall), a 0/1 indicator on mention
tokens, or ``-log(1 - max_{m in mentions} <x_i, x_m> + eps)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .core import LocalSentence, MentionSpan, ReferenceSentence
from .encoder import Encoder

DEFAULT_EPSILON = 1e-6
DEFAULT_TOP_N = 6
# Scores equal to this many decimals count as tied. Matrix products of
# different shapes can disagree in the last ulp on identical rows.
TIE_DECIMALS = 12


@dataclass(frozen=True)
class Equal:
    name = "equal"


@dataclass(frozen=True)
class Hard:
    name = "hard"


@dataclass(frozen=True)
class Soft:
    epsilon: float = DEFAULT_EPSILON
    name = "soft"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("soft epsilon must be positive")


@dataclass(frozen=True)
class Fallback:
    """Marks a score computed with plain recall because no mention was found."""
    name = "fallback"


AlphaStrategy = Union[Equal, Hard, Soft]


def parse_strategy(name: str, epsilon: float = DEFAULT_EPSILON) -> AlphaStrategy:
    key = name.lower()
    if key == "equal":
        return Equal()
    if key == "hard":
        return Hard()
    if key == "soft":
        return Soft(epsilon)
    raise ValueError(f"unknown strategy {name!r} (expected equal, hard or soft)")


class NoMentionsError(ValueError):
    pass


class DegenerateWeightsError(ValueError):
    pass


def similarity_matrix(local: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Pairwise inner products of unit rows, clipped to [-1, 1]."""
    if local.shape[1] != reference.shape[1]:
        raise ValueError(f"dimension mismatch: {local.shape[1]} vs {reference.shape[1]}")
    return np.clip(local @ reference.T, -1.0, 1.0)


def max_pool_rows(sim: np.ndarray) -> np.ndarray:
    if sim.size == 0:
        raise ValueError("empty similarity matrix")
    return sim.max(axis=1)


def alpha_weights(local: np.ndarray, mentions: Sequence[MentionSpan], strategy: AlphaStrategy,
                  log: Callable[[np.ndarray], np.ndarray] = np.log) -> np.ndarray:
    n = local.shape[0]
    if isinstance(strategy, Equal):
        return np.ones(n)
    idx = sorted({i for m in mentions for i in m.indices()})
    if not idx:
        raise NoMentionsError("no mentions")
    if idx[-1] >= n:
        raise ValueError("mention index out of bounds")
    if isinstance(strategy, Hard):
        alpha = np.zeros(n)
        alpha[idx] = 1.0
        return alpha
    if isinstance(strategy, Soft):
        cue = similarity_matrix(local, local[idx]).max(axis=1)
        # mention rows match themselves exactly
        cue[idx] = 1.0
        return -log(1.0 - cue + strategy.epsilon)
    raise TypeError(f"not an alpha strategy: {strategy!r}")


def mention_recall(local: np.ndarray, reference: np.ndarray, alpha: np.ndarray) -> float:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (local.shape[0],):
        raise ValueError("alpha length differs from local token count")
    total = alpha.sum()
    if not total > 0:
        raise DegenerateWeightsError("degenerate weights")
    best = max_pool_rows(similarity_matrix(local, reference))
    return float(alpha @ best / total)


def bertscore_recall_and_f1(local: np.ndarray, reference: np.ndarray) -> tuple[float, float, float]:
    """Unweighted (R, P, F1); F1 is 0 when P + R is 0."""
    sim = similarity_matrix(local, reference)
    r = float(sim.max(axis=1).mean())
    p = float(sim.max(axis=0).mean())
    f1 = 2 * p * r / (p + r) if p + r != 0 else 0.0
    return r, p, f1


@dataclass(frozen=True)
class ScoredReference:
    reference: ReferenceSentence
    score: float
    strategy_used: AlphaStrategy | Fallback

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValueError("score must be finite")


def rank_and_select(local: LocalSentence, candidates: Sequence[ReferenceSentence],
                    strategy: AlphaStrategy, top_n: int = DEFAULT_TOP_N,
                    encoder: Encoder | None = None, *,
                    log: Callable[[np.ndarray], np.ndarray] = np.log) -> list[ScoredReference]:
    """Score every candidate and keep the best ``top_n``.

    Sentences without mentions are scored with unweighted recall. Ties go to
    the more trusted source, then to input order.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    if not candidates:
        return []
    if encoder is None:
        raise ValueError("an encoder is required to score candidates")
    x = encoder.encode(local.tokens)
    if local.mentions:
        alpha, used = alpha_weights(x, local.mentions, strategy, log=log), strategy
    else:
        alpha, used = np.ones(len(local)), Fallback()
    if alpha.sum() <= 0:
        alpha, used = np.ones(len(local)), Fallback()
    scored = []
    for pos, ref in enumerate(candidates):
        score = mention_recall(x, encoder.encode(ref.tokens), alpha)
        key = -round(score, TIE_DECIMALS)
        scored.append((key, ref.source.trust_rank, pos, ScoredReference(ref, score, used)))
    scored.sort(key=lambda row: row[:3])
    return [row[3] for row in scored[:top_n]]


def dump_ranked(path: str | Path, ranked: Iterable[tuple[str, Sequence[ScoredReference]]]) -> None:
    """Write one JSON record per scored reference, grouped by sentence id in input order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_ranked(ranked))


def format_ranked(ranked: Iterable[tuple[str, Sequence[ScoredReference]]]) -> str:
    lines = []
    for sentence_id, refs in ranked:
        for rank, s in enumerate(refs, start=1):
            lines.append(json.dumps({
                "sentence_id": sentence_id,
                "rank": rank,
                "score": round(s.score, TIE_DECIMALS),
                "strategy": s.strategy_used.name,
                "source": s.reference.source.kind.value,
                "backend": s.reference.source.backend,
                "query": s.reference.origin_query,
                "provenance": s.reference.provenance,
                "text": s.reference.raw_text,
            }, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)
