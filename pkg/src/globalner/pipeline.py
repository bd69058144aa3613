"""End-to-end orchestration: detect → query → retrieve → re-rank → assemble → tag."""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import yaml

from .core import (
    ConllSentence,
    LocalSentence,
    MentionSpan,
    ReferenceSentence,
    bio_decode,
    format_conll,
    parse_labels,
    read_conll,
    read_documents,
)
from .detector import Gazetteer, GazetteerDetector, GoldMentionDetector, MentionDetector
from .encoder import Encoder, FileEmbeddingStore, HashNgramEncoder
from .metrics import PRF, micro_prf
from .queries import Query, QueryKind, generate_queries
from .reranker import DEFAULT_TOP_N, ScoredReference, format_ranked, parse_strategy, rank_and_select
from .retrieval import (
    CorpusBackend,
    CorpusIndex,
    FixtureSearchClient,
    HttpSearchClient,
    InternetBackend,
    RetrievalConfig,
    WikiBackend,
    WikiIndex,
    build_corpus_index,
    build_wiki_index,
    merge_dedup,
    read_corpus_file,
    read_paragraphs,
)
from .tagger import (
    DEFAULT_BUDGET,
    UNTYPED_LABELS,
    AssembledInput,
    CrfModel,
    OptimizerConfig,
    Tagger,
    TokenFeatures,
    WindowFeatures,
    assemble_masked_input,
    train,
)

log = logging.getLogger(__name__)

BACKEND_ORDER = ("internet", "wikipedia", "corpus")


class ConfigError(ValueError):
    pass


class BackendFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass
class InternetConfig:
    endpoint: str = ""
    api_key_env: str = "SEARCH_API_KEY"
    fixture: str | None = None
    max_in_flight: int = 4
    min_interval: float = 0.5
    max_retries: int = 2
    timeout: float = 10.0


@dataclass
class EncoderConfig:
    kind: str = "hash"
    dim: int = 64
    path: str | None = None


@dataclass
class DetectorConfig:
    kind: str = "gazetteer"
    gazetteer: str | None = None


@dataclass
class FeatureConfig:
    kind: str = "window"
    width: int = 1
    context: bool = True


@dataclass
class PipelineConfig:
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    backends: dict[str, bool] = field(
        default_factory=lambda: {"internet": True, "wikipedia": True, "corpus": True})
    fail_open: dict[str, bool] = field(
        default_factory=lambda: {"internet": True, "wikipedia": False, "corpus": False})
    internet: InternetConfig = field(default_factory=InternetConfig)
    wiki_index: str | None = None
    corpus_index: str | None = None
    mention_queries: bool = True
    strategy: str = "soft"
    epsilon: float = 1e-6
    top_n: int = DEFAULT_TOP_N
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    labels: list[str] = field(default_factory=lambda: list(UNTYPED_LABELS))
    checkpoint: str | None = None
    budget: int = DEFAULT_BUDGET
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    workers: int = 4
    offline: bool = False

    def validate(self, check_files: bool = True) -> "PipelineConfig":
        parse_strategy(self.strategy, self.epsilon)
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.budget < 2:
            raise ConfigError("budget must be >= 2")
        for name in list(self.backends) + list(self.fail_open):
            if name not in BACKEND_ORDER:
                raise ConfigError(f"unknown backend {name!r}")
        if self.encoder.kind not in ("hash", "file"):
            raise ConfigError(f"unknown encoder kind {self.encoder.kind!r}")
        if self.detector.kind not in ("gazetteer", "gold"):
            raise ConfigError(f"unknown detector kind {self.detector.kind!r}")
        if self.features.kind not in ("window", "token"):
            raise ConfigError(f"unknown feature provider {self.features.kind!r}")
        if check_files:
            for label, path in [("encoder.path", self.encoder.path),
                                ("detector.gazetteer", self.detector.gazetteer),
                                ("internet.fixture", self.internet.fixture),
                                ("wiki_index", self.wiki_index), ("corpus_index", self.corpus_index),
                                ("checkpoint", self.checkpoint)]:
                if path is not None and not Path(path).exists():
                    raise ConfigError(f"{label}: file not found: {path}")
        return self

    def enabled(self, backend: str) -> bool:
        return self.backends.get(backend, False)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "PipelineConfig":
        return _build(cls, data or {}, "config")

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(data)


def _build(cls, data: dict[str, Any], where: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        current = getattr(defaults, name)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{name}: expected a mapping")
            value = _build(type(current), value, f"{where}.{name}")
        elif isinstance(current, dict):
            value = {**current, **(value or {})}
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# component construction

def make_encoder(cfg: EncoderConfig) -> Encoder:
    if cfg.kind == "file":
        if not cfg.path:
            raise ConfigError("encoder.path is required for the file encoder")
        return FileEmbeddingStore.load(cfg.path)
    return HashNgramEncoder(cfg.dim)


def make_provider(cfg: FeatureConfig, encoder: Encoder):
    if cfg.kind == "token":
        return TokenFeatures(encoder)
    return WindowFeatures(encoder, width=cfg.width, context=cfg.context)


@dataclass
class SentenceResult:
    sentence: LocalSentence
    queries: list[Query]
    candidates: list[ReferenceSentence]
    ranked: list[ScoredReference]
    assembled: AssembledInput
    labels: list[str] | None = None


class Pipeline:
    def __init__(self, detector: MentionDetector | None, backends: dict[str, Any], encoder: Encoder,
                 strategy: str = "soft", epsilon: float = 1e-6, top_n: int = DEFAULT_TOP_N,
                 tagger: Tagger | None = None, budget: int = DEFAULT_BUDGET,
                 fail_open: dict[str, bool] | None = None, mention_queries: bool = True,
                 workers: int = 4):
        self.detector = detector
        self.backends = {k: backends[k] for k in BACKEND_ORDER if k in backends}
        self.encoder = encoder
        self.strategy = parse_strategy(strategy, epsilon)
        self.top_n = top_n
        self.tagger = tagger
        self.budget = budget
        self.fail_open = {"internet": True, "wikipedia": False, "corpus": False, **(fail_open or {})}
        self.mention_queries = mention_queries
        self.workers = workers

    def _search(self, name: str, backend, query: Query, sentence: LocalSentence) -> list[ReferenceSentence]:
        try:
            if isinstance(backend, CorpusBackend):
                return backend.search(query, doc_id=sentence.doc_id or None,
                                      exclude_sentence_id=sentence.sentence_id or None)
            return backend.search(query)
        except Exception as exc:
            if self.fail_open.get(name, False):
                log.warning("%s backend failed for %r; continuing without it: %s", name, query.text, exc)
                return []
            raise BackendFailure(f"{name} backend failed for {query.text!r}: {exc}") from exc

    def retrieve(self, sentence: LocalSentence) -> tuple[list[Query], list[ReferenceSentence]]:
        queries = generate_queries(sentence)
        if not self.mention_queries:
            queries = [q for q in queries if q.kind is QueryKind.WHOLE_SENTENCE]
        if not self.backends:
            return queries, []
        pooled: list[ReferenceSentence] = []
        with ThreadPoolExecutor(max_workers=len(self.backends)) as pool:
            for q in queries:
                futures = [pool.submit(self._search, name, b, q, sentence) for name, b in self.backends.items()]
                for fut in futures:
                    pooled.extend(fut.result())
        return queries, merge_dedup(pooled)

    def process(self, sentence: LocalSentence) -> SentenceResult:
        if self.detector is not None:
            sentence = sentence.with_mentions(self.detector.detect(sentence))
        queries, candidates = self.retrieve(sentence)
        ranked = rank_and_select(sentence, candidates, self.strategy, self.top_n, self.encoder)
        assembled = assemble_masked_input(sentence, ranked, self.budget)
        labels = self.tagger.decode(assembled) if self.tagger is not None else None
        return SentenceResult(sentence, queries, candidates, ranked, assembled, labels)

    def run(self, sentences: Sequence[LocalSentence]) -> list[SentenceResult]:
        if self.workers == 1:
            return [self.process(s) for s in sentences]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(self.process, sentences))


# ---------------------------------------------------------------------------
# inputs and outputs

@dataclass
class InputSentence:
    sentence: LocalSentence
    gold: list[str] | None


def load_sentences(path: str | Path) -> list[InputSentence]:
    out = []
    for doc in read_documents(path):
        for i, s in enumerate(doc.sentences):
            local = LocalSentence.from_words(s.words, sentence_id=doc.sentence_id(i), doc_id=doc.doc_id)
            out.append(InputSentence(local, list(s.labels) if s.labels else None))
    return out


def gold_mention_detector(inputs: Sequence[InputSentence]) -> GoldMentionDetector:
    spans: dict[str, list[MentionSpan]] = {}
    for item in inputs:
        if item.gold is None:
            raise ConfigError(f"sentence {item.sentence.sentence_id} has no gold labels")
        spans[item.sentence.sentence_id] = [s for s, _ in bio_decode(parse_labels(item.gold))]
    return GoldMentionDetector(spans)


def build_backends(cfg: PipelineConfig) -> dict[str, Any]:
    backends: dict[str, Any] = {}
    r = cfg.retrieval
    if cfg.enabled("internet"):
        if cfg.internet.fixture:
            client = FixtureSearchClient.load(cfg.internet.fixture)
        elif cfg.offline or not cfg.internet.endpoint:
            client = None
            log.info("internet backend skipped (offline or no endpoint configured)")
        else:
            ic = cfg.internet
            client = HttpSearchClient(ic.endpoint, ic.api_key_env, timeout=ic.timeout,
                                      max_in_flight=ic.max_in_flight, min_interval=ic.min_interval,
                                      max_retries=ic.max_retries)
        if client is not None:
            backends["internet"] = InternetBackend(client, r)
    if cfg.enabled("wikipedia") and cfg.wiki_index:
        backends["wikipedia"] = WikiBackend(WikiIndex.load(cfg.wiki_index), r.top_w)
    if cfg.enabled("corpus") and cfg.corpus_index:
        backends["corpus"] = CorpusBackend(CorpusIndex.load(cfg.corpus_index), r.top_r)
    return backends


def build_pipeline(cfg: PipelineConfig, inputs: Sequence[InputSentence] = (),
                   gold_mentions: bool = False, tagger: Tagger | None = None) -> Pipeline:
    encoder = make_encoder(cfg.encoder)
    if gold_mentions or cfg.detector.kind == "gold":
        detector: MentionDetector | None = gold_mention_detector(inputs)
    elif cfg.detector.gazetteer:
        detector = GazetteerDetector(Gazetteer.load(cfg.detector.gazetteer))
    else:
        detector = None
    if tagger is None and cfg.checkpoint:
        tagger = Tagger(CrfModel.load(cfg.checkpoint), make_provider(cfg.features, encoder))
    return Pipeline(detector, build_backends(cfg), encoder, cfg.strategy, cfg.epsilon, cfg.top_n,
                    tagger, cfg.budget, cfg.fail_open, cfg.mention_queries, cfg.workers)


@dataclass
class PipelineOutput:
    results: list[SentenceResult]

    def predictions_conll(self) -> str:
        sents = []
        for r in self.results:
            if r.labels is None:
                raise ValueError("pipeline ran without a tagger")
            sents.append(ConllSentence(r.sentence.words, r.labels))
        return format_conll(sents)

    def reference_dump(self) -> str:
        return format_ranked((r.sentence.sentence_id, r.ranked) for r in self.results)


def run_pipeline(cfg: PipelineConfig, inputs: Sequence[InputSentence], gold_mentions: bool = False,
                 tagger: Tagger | None = None) -> PipelineOutput:
    pipe = build_pipeline(cfg, inputs, gold_mentions, tagger)
    return PipelineOutput(pipe.run([i.sentence for i in inputs]))


def evaluate_micro_f1(gold_path: str | Path, pred_path: str | Path) -> PRF:
    gold, pred = read_conll(gold_path), read_conll(pred_path)
    if len(gold) != len(pred):
        raise ValueError(f"sentence count differs: {len(gold)} gold vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if g.words != p.words:
            raise ValueError(f"sentence {i}: tokens do not align")
    return micro_prf([g.labels for g in gold], [p.labels for p in pred])


def index_wiki(paragraph_file: str | Path, out: str | Path) -> WikiIndex:
    index = build_wiki_index(read_paragraphs(paragraph_file))
    index.save(out)
    return index


def index_corpus(files: Sequence[str | Path], out: str | Path, k: int, seed: int) -> CorpusIndex:
    docs = [d for f in files for d in read_corpus_file(f)]
    index = build_corpus_index(docs, k=k, seed=seed)
    index.save(out)
    return index


def training_pairs(results: Sequence[SentenceResult],
                   gold: Sequence[Sequence[str]]) -> list[tuple[AssembledInput, list[str]]]:
    if len(results) != len(gold):
        raise ValueError("results and gold labels differ in length")
    return [(r.assembled, list(g)) for r, g in zip(results, gold)]


def train_tagger(cfg: PipelineConfig, encoder: Encoder,
                 train_data: Sequence[tuple[AssembledInput, Sequence[str]]],
                 dev_data: Sequence[tuple[AssembledInput, Sequence[str]]] | None = None):
    """Fresh CRF (seeded from ``cfg.seed``) trained with ``cfg.optimizer``; returns (Tagger, TrainResult)."""
    provider = make_provider(cfg.features, encoder)
    model = CrfModel.init(cfg.labels, provider.dim, seed=cfg.seed)
    opt = dataclasses.replace(cfg.optimizer, seed=cfg.seed)
    result = train(model, provider, train_data, opt, dev=dev_data)
    result.model.meta["features"] = provider.describe()
    return Tagger(result.model, provider), result
