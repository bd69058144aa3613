import numpy as np


def unit_rows(rng, n, d):
    m = rng.normal(size=(n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


class TableEncoder:
    """Looks tokens up in a fixed word -> vector table (rows normalized)."""

    name = "table"

    def __init__(self, table):
        self.table = {w: np.asarray(v, float) / np.linalg.norm(v) for w, v in table.items()}
        self.dim = len(next(iter(self.table.values())))

    def encode(self, tokens):
        return np.stack([self.table[getattr(t, "text", t)] for t in tokens])


def one_hot_table(words, dim=None):
    dim = dim or len(words)
    return {w: np.eye(dim)[i] for i, w in enumerate(words)}


# Local sentence whose mention ("black widow") is covered by one reference,
# while another reference overlaps only on the non-mention words.
CUE_LOCAL = "black widow dresses up for fashion"
CUE_REF = "black widow spider"
CUE_DISTRACTOR = "dresses up for fashion show"
CUE_WORDS = "black widow dresses up for fashion spider show".split()


def write_pipeline_fixture(root):
    """Small on-disk setup: input CoNLL, gazetteer, wiki paragraphs, corpus text, web fixture."""
    import json

    root.mkdir(parents=True, exist_ok=True)
    (root / "input.conll").write_text(
        "black\tB\nwidow\tI\ndresses\tO\nup\tO\nfor\tO\nlondon\tB\nfashion\tI\nweek\tI\n\n"
        "so\tO\ntired\tO\ntoday\tO\n\n"
        "met\tO\nzorblax\tB\nin\tO\nparis\tB\n\n")
    (root / "gazetteer.txt").write_text("black widow\nlondon fashion week\nparis\n")
    paragraphs = [
        {"id": "w1", "text": "black widow is a marvel comics character"},
        {"id": "w2", "text": "london fashion week is a clothing trade show held in london"},
        {"id": "w3", "text": "paris is the capital of france"},
        {"id": "w4", "text": "zorblax is a fictional president"},
    ]
    (root / "wiki.jsonl").write_text("".join(json.dumps(p) + "\n" for p in paragraphs))
    (root / "corpus.txt").write_text("black widow wore a dress\nfashion week in london\n\n"
                                     "tired after paris trip\nzorblax visited paris\n")
    web = {"london fashion week": {"items": [
        {"title": "London Fashion Week", "snippet": "the biannual show", "link": "https://lfw.example/a"},
        {"title": "code", "snippet": "x", "link": "https://github.com/lfw"}]}}
    (root / "web.json").write_text(json.dumps(web))
    return root
