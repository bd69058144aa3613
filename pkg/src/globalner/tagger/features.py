"""Per-position feature providers standing in for a contextual encoder."""

from __future__ import annotations

from typing import Protocol

import numpy as np

from ..encoder import Encoder
from .assemble import AssembledInput


class FeatureProvider(Protocol):
    dim: int

    def featurize(self, inp: AssembledInput) -> np.ndarray: ...

    def describe(self) -> dict: ...


def _embed(encoder: Encoder, inp: AssembledInput) -> np.ndarray:
    """Encoder rows for every position; the [C]/[S] markers get zero rows."""
    out = np.zeros((len(inp), encoder.dim))
    idx = [*inp.local_range, *inp.reference_range]
    if idx:
        out[idx] = encoder.encode([inp.tokens[i] for i in idx])
    return out


class TokenFeatures:
    """Each position sees only its own token: embedding plus a bias feature."""

    def __init__(self, encoder: Encoder):
        self.encoder = encoder
        self.dim = encoder.dim + 1

    def featurize(self, inp: AssembledInput) -> np.ndarray:
        emb = _embed(self.encoder, inp)
        return np.hstack([emb, np.ones((len(inp), 1))])

    def describe(self) -> dict:
        return {"kind": "token", "encoder": self.encoder.name}


class WindowFeatures:
    """Neighbor embeddings within ``±width``, plus an optional retrieved-context block.

    The window is taken over the whole assembled sequence, so local tokens near
    the end see the [S] marker and the first reference tokens. With
    ``context=True`` every local token also gets, per offset, the mean
    embedding of the neighbors of its case-insensitive occurrences inside the
    reference segment, and a flag saying whether any occurrence was found.
    """

    def __init__(self, encoder: Encoder, width: int = 1, context: bool = True):
        if width < 0:
            raise ValueError("width must be >= 0")
        self.encoder = encoder
        self.width = width
        self.context = context
        d = encoder.dim
        self.dim = (2 * width + 1) * d + 1
        if context:
            self.dim += 2 * width * d + 1

    def featurize(self, inp: AssembledInput) -> np.ndarray:
        emb = _embed(self.encoder, inp)
        n, d, w = len(inp), self.encoder.dim, self.width
        padded = np.vstack([np.zeros((w, d)), emb, np.zeros((w, d))])
        blocks = [padded[w + o: w + o + n] for o in range(-w, w + 1)]
        if self.context:
            blocks.append(self._context_block(inp, emb))
        blocks.append(np.ones((n, 1)))
        return np.hstack(blocks)

    def _context_block(self, inp: AssembledInput, emb: np.ndarray) -> np.ndarray:
        n, d, w = len(inp), self.encoder.dim, self.width
        offsets = [o for o in range(-w, w + 1) if o != 0]
        out = np.zeros((n, len(offsets) * d + 1))
        ref = inp.reference_range
        if not len(ref):
            return out
        where: dict[str, list[int]] = {}
        for q in ref:
            where.setdefault(inp.tokens[q].text.lower(), []).append(q)
        for p in inp.local_range:
            hits = where.get(inp.tokens[p].text.lower())
            if not hits:
                continue
            for k, o in enumerate(offsets):
                rows = [emb[q + o] for q in hits if ref.start <= q + o < ref.stop]
                if rows:
                    out[p, k * d:(k + 1) * d] = np.mean(rows, axis=0)
            out[p, -1] = 1.0
        return out

    def describe(self) -> dict:
        return {"kind": "window", "encoder": self.encoder.name, "width": self.width,
                "context": self.context}
