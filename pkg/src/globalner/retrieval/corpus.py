"""Two-stage source-corpus search: tf-idf + k-means cluster lookup, then partial match."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from sklearn.feature_extraction.text import TfidfVectorizer

from ..core import ReferenceSentence, SourceKind, SourceTag, Token, read_documents, tokenize
from ..queries import Query


def tfidf_vectorize(docs: Sequence[Sequence[str]]) -> tuple[sparse.csr_matrix, list[str]]:
    """Raw-count tf times smoothed idf ``ln((1+N)/(1+df)) + 1``, rows L2-normalized.

    Returns the document-term matrix and the column vocabulary.
    """
    if len(docs) == 0:
        raise ValueError("need at least one document")
    vec = TfidfVectorizer(analyzer=lambda d: d, lowercase=False, norm="l2",
                          use_idf=True, smooth_idf=True, sublinear_tf=False)
    matrix = vec.fit_transform([list(d) for d in docs])
    return matrix.tocsr(), list(vec.get_feature_names_out())


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    objective: list[float]  # within-cluster SSE after each assignment step
    n_iter: int


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    closest = _sq_dists(X, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers.append(X[idx])
        closest = np.minimum(closest, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers)


def kmeans(vectors, k: int, seed: int = 0, max_iters: int = 100) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeding.

    An emptied cluster is reseeded with the point farthest from its current
    centroid. With ``k >= N`` every point becomes its own cluster.
    """
    X = vectors.toarray() if sparse.issparse(vectors) else np.asarray(vectors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n == 0:
        raise ValueError("no vectors to cluster")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= n:
        return KMeansResult(X.copy(), np.arange(n), [0.0], 0)

    rng = np.random.default_rng(seed)
    C = _kmeanspp(X, k, rng)
    labels = None
    objective: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        d = _sq_dists(X, C)
        new_labels = d.argmin(1)
        point_cost = d[np.arange(n), new_labels]
        objective.append(float(point_cost.sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(0)
            else:
                far = int(point_cost.argmax())
                C[j] = X[far]
                point_cost[far] = 0.0
    return KMeansResult(C, labels, objective, it)


def kmeans_objective(X: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    diff = X - centroids[labels]
    return float((diff * diff).sum())


@dataclass
class CorpusSentence:
    sentence_id: str
    doc_id: str
    tokens: tuple[Token, ...]
    text: str
    terms: frozenset[str] = field(init=False)

    def __post_init__(self):
        self.terms = frozenset(t.text.lower() for t in self.tokens)


def partial_match_score(sentence: CorpusSentence, query_terms: frozenset[str]) -> float:
    if not query_terms:
        return 0.0
    return len(query_terms & sentence.terms) / len(query_terms)


def partial_match_search(sentences: Sequence[CorpusSentence], query: Query, top_r: int,
                         source: SourceTag | None = None,
                         exclude: Iterable[str] = ()) -> list[ReferenceSentence]:
    """Rank by fraction of unique query tokens present; shorter, then earlier, wins ties."""
    source = source or SourceTag(SourceKind.SOURCE_CORPUS, "partial-match")
    q = frozenset(t.text.lower() for t in tokenize(query.text))
    skip = set(exclude)
    scored = []
    for pos, s in enumerate(sentences):
        if s.sentence_id in skip:
            continue
        score = partial_match_score(s, q)
        if score > 0:
            scored.append((-score, len(s.tokens), pos, s))
    scored.sort(key=lambda row: row[:3])
    return [ReferenceSentence(s.tokens, source, query.text, s.text, provenance=s.sentence_id)
            for *_, s in scored[:top_r]]


class CorpusIndex:
    def __init__(self, sentences: list[CorpusSentence], doc_ids: list[str],
                 tfidf: sparse.csr_matrix, vocabulary: list[str], clustering: KMeansResult, seed: int):
        self.sentences = sentences
        self.doc_ids = doc_ids
        self.tfidf = tfidf
        self.vocabulary = vocabulary
        self.centroids = clustering.centroids
        self.seed = seed
        self.k = clustering.centroids.shape[0]
        self.assignment = {d: int(c) for d, c in zip(doc_ids, clustering.labels)}
        self._members: dict[int, list[CorpusSentence]] = {}
        for s in sentences:
            self._members.setdefault(self.assignment[s.doc_id], []).append(s)

    def cluster_of(self, doc_id: str) -> int:
        try:
            return self.assignment[doc_id]
        except KeyError:
            raise KeyError(f"unknown document id {doc_id!r}") from None

    def cluster_sentences(self, cluster: int) -> list[CorpusSentence]:
        return self._members.get(cluster, [])

    def save(self, path: str | Path) -> None:
        docs: dict[str, list[list[str]]] = {d: [] for d in self.doc_ids}
        for s in self.sentences:
            docs[s.doc_id].append([s.sentence_id, s.text])
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"format": "globalner-corpus", "version": 1, "seed": self.seed, "k": self.k,
                       "documents": [[d, docs[d]] for d in self.doc_ids]}, fh)

    @classmethod
    def load(cls, path: str | Path) -> "CorpusIndex":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("format") != "globalner-corpus":
            raise ValueError(f"{path} is not a corpus index")
        docs = [(d, [(sid, text) for sid, text in sents]) for d, sents in data["documents"]]
        return build_corpus_index(docs, k=data["k"], seed=data["seed"])


def build_corpus_index(documents: Iterable[tuple[str, Sequence[tuple[str, str]]]],
                       k: int = 5, seed: int = 0, max_iters: int = 100) -> CorpusIndex:
    """Index documents given as ``(doc_id, [(sentence_id, text), ...])``."""
    sentences: list[CorpusSentence] = []
    doc_ids: list[str] = []
    doc_terms: list[list[str]] = []
    for doc_id, sents in documents:
        doc_ids.append(doc_id)
        terms: list[str] = []
        for sid, text in sents:
            toks = tuple(tokenize(text))
            if not toks:
                continue
            sentences.append(CorpusSentence(sid, doc_id, toks, text))
            terms.extend(t.text.lower() for t in toks)
        doc_terms.append(terms)
    if not doc_ids:
        raise ValueError("corpus has no documents")
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("duplicate document ids")
    matrix, vocab = tfidf_vectorize(doc_terms)
    clustering = kmeans(matrix, k, seed=seed, max_iters=max_iters)
    return CorpusIndex(sentences, doc_ids, matrix, vocab, clustering, seed)


def search_corpus(index: CorpusIndex, local_doc_id: str, query: Query, top_r: int,
                  exclude_sentence_id: str | None = None,
                  source: SourceTag | None = None) -> list[ReferenceSentence]:
    cluster = index.cluster_of(local_doc_id)
    exclude = [exclude_sentence_id] if exclude_sentence_id else []
    return partial_match_search(index.cluster_sentences(cluster), query, top_r, source, exclude)


class CorpusBackend:
    """Needs the local sentence's document id; the pipeline passes it per call."""

    def __init__(self, index: CorpusIndex, top_k: int = 15, name: str = "as-retrieval"):
        self.index = index
        self.top_k = top_k
        self.source = SourceTag(SourceKind.SOURCE_CORPUS, name)

    def search(self, query: Query, top_k: int | None = None, *, doc_id: str | None = None,
               exclude_sentence_id: str | None = None) -> list[ReferenceSentence]:
        if doc_id is None or doc_id not in self.index.assignment:
            # sentence is not part of the indexed corpus: search everything
            return partial_match_search(self.index.sentences, query, top_k or self.top_k,
                                        self.source, [exclude_sentence_id] if exclude_sentence_id else [])
        return search_corpus(self.index, doc_id, query, top_k or self.top_k,
                             exclude_sentence_id, self.source)


# ---------------------------------------------------------------------------
# ingestion

def read_corpus_file(path: str | Path) -> list[tuple[str, list[tuple[str, str]]]]:
    """Source-corpus documents as ``(doc_id, [(sentence_id, text), ...])``."""
    return [(doc.doc_id, [(doc.sentence_id(i), " ".join(s.words)) for i, s in enumerate(doc.sentences)])
            for doc in read_documents(path)]
