"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .core import ConllFormatError, ConllSentence, ReferenceSentence, SourceKind, SourceTag, format_conll
from .pipeline import (
    BackendFailure,
    ConfigError,
    PipelineConfig,
    build_pipeline,
    evaluate_micro_f1,
    index_corpus,
    index_wiki,
    load_sentences,
    make_encoder,
    train_tagger,
    training_pairs,
)
from .reranker import format_ranked, rank_and_select
from .retrieval import SearchError
from .tagger import assemble_masked_input

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

log = logging.getLogger("globalner")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML config file (defaults are used for missing keys)")
    p.add_argument("--strategy", choices=["equal", "hard", "soft"])
    p.add_argument("--top-n", type=int)
    p.add_argument("--gold-mentions", action="store_true", help="use gold spans from the input as mentions")
    p.add_argument("--offline", action="store_true", help="never contact the live search endpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-references", metavar="PATH", help="write ranked references as JSON lines")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="globalner", description="retrieval-augmented named entity recognition")
    ap.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    ap.add_argument("--config", help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("index-wiki", parents=[common], help="build a BM25 index from paragraph JSON lines")
    p.add_argument("paragraphs")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("index-corpus", parents=[common], help="cluster a source corpus (tf-idf + k-means)")
    p.add_argument("files", nargs="+")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=int)

    p = sub.add_parser("retrieve", parents=[common], help="detect, query and retrieve candidates")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("rerank", parents=[common], help="score retrieved candidates and keep Top-N")
    p.add_argument("input")
    p.add_argument("--candidates", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("assemble", parents=[common], help="build masked tagger inputs from ranked references")
    p.add_argument("input")
    p.add_argument("--ranked", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("train", parents=[common], help="train the masked CRF tagger")
    p.add_argument("train")
    p.add_argument("--dev")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("tag", parents=[common], help="tag sentences with a trained checkpoint")
    p.add_argument("input")
    p.add_argument("--checkpoint")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("pipeline", parents=[common], help="run all stages end to end")
    p.add_argument("input")
    p.add_argument("--checkpoint")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("eval", parents=[common], help="entity-level micro P/R/F1")
    p.add_argument("gold")
    p.add_argument("predicted")
    return ap


def load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "strategy", None):
        cfg.strategy = args.strategy
    if getattr(args, "top_n", None) is not None:
        cfg.top_n = args.top_n
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "offline", False):
        cfg.offline = True
    if getattr(args, "checkpoint", None):
        cfg.checkpoint = args.checkpoint
    return cfg.validate()


# ---------------------------------------------------------------------------
# JSON-lines interchange between the staged commands

def _ref_record(sentence_id: str, ref: ReferenceSentence) -> dict:
    return {"sentence_id": sentence_id, "source": ref.source.kind.value, "backend": ref.source.backend,
            "query": ref.origin_query, "provenance": ref.provenance, "text": ref.raw_text}


def _ref_from_record(rec: dict) -> ReferenceSentence:
    return ReferenceSentence.from_text(rec["text"], SourceTag(SourceKind(rec["source"]), rec.get("backend", "")),
                                       rec.get("query", ""), rec.get("provenance", ""))


def _read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{line_no}: {exc}") from None
    return out


def _group(records: list[dict]) -> dict[str, list[dict]]:
    grouped: dict[str, list[dict]] = {}
    for rec in records:
        grouped.setdefault(rec["sentence_id"], []).append(rec)
    return grouped


# ---------------------------------------------------------------------------
# commands

def cmd_index_wiki(args, cfg):
    index = index_wiki(args.paragraphs, args.output)
    print(f"indexed {len(index)} paragraphs, {len(index.postings)} terms -> {args.output}")


def cmd_index_corpus(args, cfg):
    k = args.k or cfg.retrieval.k_clusters
    index = index_corpus(args.files, args.output, k=k, seed=cfg.seed)
    print(f"indexed {len(index.doc_ids)} documents / {len(index.sentences)} sentences "
          f"into {index.k} clusters (seed {index.seed}) -> {args.output}")


def cmd_retrieve(args, cfg):
    inputs = load_sentences(args.input)
    pipe = build_pipeline(cfg, inputs, args.gold_mentions)
    lines = []
    for item in inputs:
        sent = item.sentence
        if pipe.detector is not None:
            sent = sent.with_mentions(pipe.detector.detect(sent))
        _, candidates = pipe.retrieve(sent)
        lines += [json.dumps(_ref_record(sent.sentence_id, r), ensure_ascii=False) for r in candidates]
    Path(args.output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def cmd_rerank(args, cfg):
    inputs = load_sentences(args.input)
    pipe = build_pipeline(cfg, inputs, args.gold_mentions)
    grouped = _group(_read_jsonl(args.candidates))
    ranked = []
    for item in inputs:
        sent = item.sentence
        if pipe.detector is not None:
            sent = sent.with_mentions(pipe.detector.detect(sent))
        cands = [_ref_from_record(r) for r in grouped.get(sent.sentence_id, [])]
        ranked.append((sent.sentence_id, rank_and_select(sent, cands, pipe.strategy, pipe.top_n, pipe.encoder)))
    Path(args.output).write_text(format_ranked(ranked), encoding="utf-8")


def cmd_assemble(args, cfg):
    inputs = load_sentences(args.input)
    grouped = _group(_read_jsonl(args.ranked))
    lines = []
    for item in inputs:
        sent = item.sentence
        recs = sorted(grouped.get(sent.sentence_id, []), key=lambda r: r.get("rank", 0))
        inp = assemble_masked_input(sent, [_ref_from_record(r) for r in recs], cfg.budget)
        lines.append(json.dumps({"sentence_id": sent.sentence_id, "tokens": [t.text for t in inp.tokens],
                                 "mask": [int(m) for m in inp.mask]}, ensure_ascii=False))
    Path(args.output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _pairs(cfg, path, gold_mentions):
    inputs = load_sentences(path)
    if any(i.gold is None for i in inputs):
        raise ValueError(f"{path}: training data needs gold labels")
    pipe = build_pipeline(cfg, inputs, gold_mentions)
    results = pipe.run([i.sentence for i in inputs])
    return results, training_pairs(results, [i.gold for i in inputs])


def cmd_train(args, cfg):
    cfg.checkpoint = None
    train_results, train_data = _pairs(cfg, args.train, args.gold_mentions)
    dev_data = _pairs(cfg, args.dev, args.gold_mentions)[1] if args.dev else None
    tagger, result = train_tagger(cfg, make_encoder(cfg.encoder), train_data, dev_data)
    tagger.model.save(args.output)
    if args.dump_references:
        Path(args.dump_references).write_text(
            format_ranked((r.sentence.sentence_id, r.ranked) for r in train_results), encoding="utf-8")
    summary = {"epochs": len(result.epoch_losses), "best_epoch": result.best_epoch,
               "final_loss": result.epoch_losses[-1] if result.epoch_losses else None,
               "dev_f1": result.dev_f1[result.best_epoch - 1] if result.dev_f1 else None}
    print(json.dumps(summary))


def _tag(args, cfg):
    if not cfg.checkpoint:
        raise ConfigError("a tagger checkpoint is required (--checkpoint or config 'checkpoint')")
    inputs = load_sentences(args.input)
    pipe = build_pipeline(cfg, inputs, args.gold_mentions)
    results = pipe.run([i.sentence for i in inputs])
    Path(args.output).write_text(
        format_conll(ConllSentence(r.sentence.words, r.labels) for r in results), encoding="utf-8")
    if args.dump_references:
        Path(args.dump_references).write_text(
            format_ranked((r.sentence.sentence_id, r.ranked) for r in results), encoding="utf-8")


def cmd_eval(args, cfg):
    prf = evaluate_micro_f1(args.gold, args.predicted)
    print(json.dumps({"precision": prf.precision, "recall": prf.recall, "f1": prf.f1,
                      "tp": prf.tp, "predicted": prf.n_pred, "gold": prf.n_gold}))


COMMANDS = {
    "index-wiki": cmd_index_wiki, "index-corpus": cmd_index_corpus, "retrieve": cmd_retrieve,
    "rerank": cmd_rerank, "assemble": cmd_assemble, "train": cmd_train, "tag": _tag,
    "pipeline": _tag, "eval": cmd_eval,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.print_config or args.command is None:
            if args.command is None and not args.print_config:
                parser.print_usage(sys.stderr)
                return EXIT_USAGE
            cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
            sys.stdout.write(cfg.dump())
            return EXIT_OK
        cfg = load_config(args)
        COMMANDS[args.command](args, cfg)
    except (BackendFailure, SearchError) as exc:
        print(f"globalner: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ConfigError, ConllFormatError, ValueError, KeyError, OSError) as exc:
        print(f"globalner: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
