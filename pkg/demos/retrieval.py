# Three retrieval backends over small in-memory sources.
#
#   wikipedia: BM25 over paragraphs
#   corpus:    tf-idf + k-means clusters of documents, then partial matching
#              of sentences within the local document's cluster
#   internet:  a search client; here replayed from a canned response

from globalner import ReferenceSentence
from globalner.queries import Query, QueryKind
from globalner.retrieval import (
    CorpusBackend,
    InternetBackend,
    WikiBackend,
    build_corpus_index,
    build_wiki_index,
    merge_dedup,
)
from globalner.retrieval.internet import FixtureSearchClient

paragraphs = [
    ("lfw", "london fashion week is a clothing trade show held in london twice each year"),
    ("bw", "black widow is a fictional character appearing in american comic books"),
    ("paris", "paris fashion week follows in october"),
    ("tea", "afternoon tea is a light meal"),
]
wiki = WikiBackend(build_wiki_index(paragraphs), top_k=6)

q = Query("london fashion week", QueryKind.MENTION, 0)
print("wikipedia:")
for r in wiki.search(q):
    print(f"  [{r.provenance}] {r.raw_text}")

documents = [
    ("news-0", [("news-0:0", "designers showed at london fashion week"),
                ("news-0:1", "models walked the runway")]),
    ("news-1", [("news-1:0", "the fashion week schedule was announced"),
                ("news-1:1", "london hosts the autumn shows")]),
    ("food-0", [("food-0:0", "bake the bread in a hot oven"),
                ("food-0:1", "london bakers bake bread with butter and flour")]),
    ("food-1", [("food-1:0", "whisk the eggs with butter and sugar"),
                ("food-1:1", "bake in a hot oven")]),
]
index = build_corpus_index(documents, k=2, seed=0)
print("\nclusters:", {d: index.cluster_of(d) for d, _ in documents})

# Searching from a news document only looks at news-like documents, even
# though "london" also appears in a food document.
corpus = CorpusBackend(index, top_k=15)
print("corpus hits for a sentence in news-0:")
for r in corpus.search(q, doc_id="news-0", exclude_sentence_id="news-0:0"):
    print(f"  [{r.provenance}] {r.raw_text}")

canned = {"london fashion week": {"items": [
    {"title": "London Fashion Week", "snippet": "official schedule and designers", "link": "https://lfw.example/"},
    {"title": "lfw-scraper", "snippet": "source code", "link": "https://github.com/someone/lfw"},
    {"title": "Tagged data", "snippet": "London\tB-location", "link": "https://data.example/"},
]}}
web = InternetBackend(FixtureSearchClient(canned))
print("\ninternet (blocked host and tagged text removed):")
web_hits = web.search(q)
for r in web_hits:
    print(f"  [{r.provenance}] {r.raw_text}")

# Pooled results are deduplicated on normalized text; the most trusted copy wins.
pooled = web_hits + wiki.search(q) + [ReferenceSentence.from_text("london fashion week  official schedule and designers.",
                                                                   wiki.source)]
print("\nmerged:", len(pooled), "->", len(merge_dedup(pooled)))
