from .base import RetrievalConfig, SearchBackend, merge_dedup, normalize_text
from .corpus import (
    CorpusBackend,
    CorpusIndex,
    CorpusSentence,
    KMeansResult,
    build_corpus_index,
    kmeans,
    partial_match_search,
    read_corpus_file,
    search_corpus,
    tfidf_vectorize,
)
from .internet import (
    FixtureSearchClient,
    HttpSearchClient,
    InternetBackend,
    SearchBackendError,
    SearchError,
    SearchParseError,
    SearchTransportError,
    internet_search,
)
from .wiki import WikiBackend, WikiIndex, build_wiki_index, read_paragraphs, search_wiki

__all__ = [
    "CorpusBackend", "CorpusIndex", "CorpusSentence", "FixtureSearchClient", "HttpSearchClient",
    "InternetBackend", "KMeansResult", "RetrievalConfig", "SearchBackend", "SearchBackendError",
    "SearchError", "SearchParseError", "SearchTransportError", "WikiBackend", "WikiIndex",
    "build_corpus_index", "build_wiki_index", "internet_search", "kmeans", "merge_dedup",
    "normalize_text", "partial_match_search", "read_corpus_file", "read_paragraphs",
    "search_corpus", "search_wiki", "tfidf_vectorize",
]
