"""Token encoders producing unit-norm embedding rows.

Any object with ``name``, ``dim`` and ``encode(tokens) -> ndarray`` works as an
encoder. Two are provided: a deterministic hashed character n-gram encoder for
offline use, and a file-backed store for externally computed vectors.
"""

from __future__ import annotations

import hashlib
import threading
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import Token

NGRAM_SIZES = (2, 3, 4)


class Encoder(Protocol):
    name: str
    dim: int

    def encode(self, tokens: Sequence[Token | str]) -> np.ndarray: ...


def _text(tok: Token | str) -> str:
    return tok if isinstance(tok, str) else tok.text


def _bucket(key: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    h = int.from_bytes(digest, "little")
    return (h >> 1) % dim, (1.0 if h & 1 else -1.0)


def char_ngrams(text: str) -> list[str]:
    padded = f"<{text.lower()}>"
    return [padded[i:i + n] for n in NGRAM_SIZES for i in range(len(padded) - n + 1)]


def hash_ngram_encode(token: Token | str, dim: int) -> np.ndarray:
    """Signed hashed counts of the token's character 2..4-grams, L2-normalized.

    The lowercased token is wrapped in ``<`` ``>`` boundary markers first, so
    one-character tokens still produce n-grams.
    """
    if dim < 8:
        raise ValueError("dim must be >= 8")
    text = _text(token)
    vec = np.zeros(dim)
    for gram in char_ngrams(text):
        idx, sign = _bucket(gram, dim)
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # every n-gram cancelled out; fall back to a one-hot of the whole token
        idx, sign = _bucket("\x00" + text.lower(), dim)
        vec[idx] = sign
        norm = 1.0
    return vec / norm


class HashNgramEncoder:
    """Context-free reference encoder with a thread-safe per-token cache."""

    def __init__(self, dim: int = 64, name: str | None = None):
        if dim < 8:
            raise ValueError("dim must be >= 8")
        self.dim = dim
        self.name = name or f"hash-ngram-{dim}"
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def vector(self, text: str) -> np.ndarray:
        key = text.lower()
        vec = self._cache.get(key)
        if vec is None:
            vec = hash_ngram_encode(key, self.dim)
            vec.setflags(write=False)
            with self._lock:
                vec = self._cache.setdefault(key, vec)
        return vec

    def encode(self, tokens: Sequence[Token | str]) -> np.ndarray:
        if len(tokens) == 0:
            raise ValueError("empty sentence")
        return np.stack([self.vector(_text(t)) for t in tokens])


class FileEmbeddingStore:
    """Vectors loaded from ``token<TAB>v1 v2 ... vd`` lines.

    Tokens missing from the file are encoded by ``fallback`` (a hash encoder of
    the same dimension unless given). Lookup is exact first, then lowercased.
    """

    def __init__(self, vectors: dict[str, np.ndarray], name: str = "file-store",
                 fallback: Encoder | None = None):
        if not vectors:
            raise ValueError("embedding store is empty")
        dims = {v.shape[0] for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent vector dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        self.name = name
        self._vectors = {}
        for tok, v in vectors.items():
            norm = np.linalg.norm(v)
            if norm == 0:
                raise ValueError(f"zero vector for token {tok!r}")
            self._vectors[tok] = np.asarray(v, dtype=float) / norm
        self.fallback = fallback or HashNgramEncoder(max(self.dim, 8))
        if self.fallback.dim != self.dim:
            raise ValueError("fallback encoder dimension differs from the store")

    @classmethod
    def load(cls, path: str | Path, **kw) -> "FileEmbeddingStore":
        vectors = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                tok, sep, rest = line.partition("\t")
                if not sep:
                    raise ValueError(f"{path}:{line_no}: expected token<TAB>vector")
                vectors[tok] = np.array([float(x) for x in rest.split()])
        kw.setdefault("name", f"file:{Path(path).name}")
        return cls(vectors, **kw)

    def __contains__(self, text: str) -> bool:
        return text in self._vectors or text.lower() in self._vectors

    def encode(self, tokens: Sequence[Token | str]) -> np.ndarray:
        if len(tokens) == 0:
            raise ValueError("empty sentence")
        rows = []
        for t in tokens:
            text = _text(t)
            v = self._vectors.get(text)
            if v is None:
                v = self._vectors.get(text.lower())
            rows.append(v if v is not None else self.fallback.encode([text])[0])
        return np.stack(rows)
