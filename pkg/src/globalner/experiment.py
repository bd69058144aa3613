"""No-context vs retrieved-context comparison on a fixture directory.

The directory holds ``train/dev/test.conll``, ``wiki.jsonl`` and
``gazetteer.txt`` (see :mod:`globalner.synthetic`). Both runs share the
encoder, feature provider, seeds and optimizer settings; they differ only in
whether the Wikipedia backend is enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .detector import Gazetteer, GazetteerDetector
from .metrics import PRF, micro_prf
from .pipeline import (
    Pipeline,
    PipelineConfig,
    load_sentences,
    make_encoder,
    train_tagger,
    training_pairs,
)
from .retrieval import WikiBackend, build_wiki_index, read_paragraphs
from .tagger import TrainResult


@dataclass
class RunResult:
    name: str
    test: PRF
    train: TrainResult
    predictions: list[list[str]] = field(repr=False, default_factory=list)


def run_setting(name: str, cfg: PipelineConfig, fixture_dir: Path, backends: dict) -> RunResult:
    encoder = make_encoder(cfg.encoder)
    detector = GazetteerDetector(Gazetteer.load(fixture_dir / "gazetteer.txt"))
    pipe = Pipeline(detector, backends, encoder, cfg.strategy, cfg.epsilon, cfg.top_n,
                    budget=cfg.budget, mention_queries=cfg.mention_queries, workers=cfg.workers)
    splits = {s: load_sentences(fixture_dir / f"{s}.conll") for s in ("train", "dev", "test")}
    results = {s: pipe.run([i.sentence for i in items]) for s, items in splits.items()}
    pairs = {s: training_pairs(results[s], [i.gold for i in splits[s]]) for s in splits}
    tagger, train_result = train_tagger(cfg, encoder, pairs["train"], pairs["dev"])
    preds = [tagger.decode(r.assembled) for r in results["test"]]
    gold = [i.gold for i in splits["test"]]
    return RunResult(name, micro_prf(gold, preds), train_result, preds)


def run_context_experiment(fixture_dir: str | Path, cfg: PipelineConfig | None = None) -> dict[str, RunResult]:
    fixture_dir = Path(fixture_dir)
    cfg = cfg or PipelineConfig(workers=1)
    wiki = build_wiki_index(read_paragraphs(fixture_dir / "wiki.jsonl"))
    return {
        "baseline": run_setting("baseline", cfg, fixture_dir, {}),
        "context": run_setting("context", cfg, fixture_dir,
                               {"wikipedia": WikiBackend(wiki, cfg.retrieval.top_w)}),
    }


def run_seeds(fixture_dir: str | Path, seeds: list[int],
              cfg: PipelineConfig | None = None) -> list[dict[str, float | int]]:
    """One row per seed with both test F1 scores; aggregation is left to the caller."""
    base = cfg or PipelineConfig(workers=1)
    rows = []
    for seed in seeds:
        runs = run_context_experiment(fixture_dir, replace(base, seed=seed))
        rows.append({"seed": seed, "baseline_f1": runs["baseline"].test.f1,
                     "context_f1": runs["context"].test.f1})
    return rows
