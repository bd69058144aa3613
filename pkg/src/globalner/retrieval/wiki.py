"""Local BM25 inverted index over paragraph records."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from ..core import ReferenceSentence, SourceKind, SourceTag, tokenize
from ..queries import Query

K1 = 1.2
B = 0.75


def index_terms(text: str) -> list[str]:
    return [t.text.lower() for t in tokenize(text)]


@dataclass
class WikiDocument:
    doc_id: str
    text: str
    terms: list[str]


class WikiIndex:
    def __init__(self, documents: list[WikiDocument], k1: float = K1, b: float = B):
        if not documents:
            raise ValueError("cannot index an empty corpus")
        self.documents = documents
        self.k1, self.b = k1, b
        postings: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for d, doc in enumerate(documents):
            for term, tf in Counter(doc.terms).items():
                postings[term].append((d, tf))
        self.postings = dict(postings)
        self.doc_lengths = [len(doc.terms) for doc in documents]
        self.avg_doc_length = sum(self.doc_lengths) / len(documents)

    def __len__(self):
        return len(self.documents)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        n, df = len(self.documents), self.df(term)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def scores(self, terms: Iterable[str]) -> dict[int, float]:
        out: dict[int, float] = defaultdict(float)
        avg = self.avg_doc_length or 1.0
        for term in dict.fromkeys(terms):
            plist = self.postings.get(term)
            if not plist:
                continue
            idf = self.idf(term)
            for d, tf in plist:
                norm = self.k1 * (1.0 - self.b + self.b * self.doc_lengths[d] / avg)
                out[d] += idf * tf * (self.k1 + 1.0) / (tf + norm)
        return out

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"format": "globalner-wiki", "version": 1, "k1": self.k1, "b": self.b,
                       "documents": [[d.doc_id, d.text] for d in self.documents]}, fh)

    @classmethod
    def load(cls, path: str | Path) -> "WikiIndex":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("format") != "globalner-wiki":
            raise ValueError(f"{path} is not a wiki index")
        return build_wiki_index(((d, t) for d, t in data["documents"]), k1=data["k1"], b=data["b"])


def build_wiki_index(paragraphs: Iterable[tuple[str, str]], k1: float = K1, b: float = B) -> WikiIndex:
    docs = [WikiDocument(str(doc_id), text, index_terms(text)) for doc_id, text in paragraphs]
    return WikiIndex(docs, k1=k1, b=b)


def read_paragraphs(path: str | Path) -> Iterator[tuple[str, str]]:
    """Line-delimited ``{"id": ..., "text": ...}`` records."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                yield str(rec["id"]), rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad paragraph record ({exc})") from None


def search_wiki(index: WikiIndex, query: Query, top_w: int,
                source: SourceTag | None = None) -> list[ReferenceSentence]:
    source = source or SourceTag(SourceKind.WIKIPEDIA, "bm25")
    scores = index.scores(index_terms(query.normalized))
    ranked = sorted((d for d, s in scores.items() if s > 0), key=lambda d: (-scores[d], d))
    out = []
    for d in ranked:
        doc = index.documents[d]
        if not doc.terms:
            continue
        out.append(ReferenceSentence.from_text(doc.text, source, query.text, provenance=doc.doc_id))
        if len(out) == top_w:
            break
    return out


class WikiBackend:
    def __init__(self, index: WikiIndex, top_k: int = 6, name: str = "bm25"):
        self.index = index
        self.top_k = top_k
        self.source = SourceTag(SourceKind.WIKIPEDIA, name)

    def search(self, query: Query, top_k: int | None = None) -> list[ReferenceSentence]:
        return search_wiki(self.index, query, top_k or self.top_k, self.source)
