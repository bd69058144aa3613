"""Retrieval-augmented named entity recognition.

Stages: mention detection, mention-aware query generation, retrieval from web
search / a local BM25 wiki index / the source corpus, MentionScore re-ranking,
and a masked linear-chain CRF tagger over the assembled input.
"""

from .core import (
    BioLabel,
    LocalSentence,
    MentionSpan,
    ReferenceSentence,
    SourceKind,
    SourceTag,
    Token,
    bio_decode,
    bio_encode,
    strip_types,
    tokenize,
)
from .detector import Gazetteer, GazetteerDetector, GoldMentionDetector, detect_mentions
from .encoder import FileEmbeddingStore, HashNgramEncoder, hash_ngram_encode
from .queries import Query, QueryKind, generate_queries
from .reranker import (
    Equal,
    Fallback,
    Hard,
    ScoredReference,
    Soft,
    alpha_weights,
    bertscore_recall_and_f1,
    max_pool_rows,
    mention_recall,
    rank_and_select,
    similarity_matrix,
)

__version__ = "0.1.0"
