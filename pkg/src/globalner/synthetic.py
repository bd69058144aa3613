"""Synthetic corpus where entity status is only recoverable from retrieved context.

Local sentences put an invented word (or two) into a neutral slot; half the
slot fillers are entities and half are ordinary nouns, drawn from the same
word generator so surface form carries no signal. A paragraph collection
describes every filler with cue words next to it ("the famous singer X",
"people use the X"), and a gazetteer lists the entity names. Every filler
occurs in exactly one local sentence, so dev/test entities are unseen in
training.

Run ``python -m globalner.synthetic OUTDIR`` to write the fixture files.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConllSentence, format_conll

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"

LOCAL_ONE = [
    "i saw {} yesterday",
    "have you heard about {} ?",
    "{} is all over my feed today",
    "we talked about {} for hours",
    "cannot stop thinking about {}",
    "anyone else excited about {} ?",
    "my friend keeps mentioning {}",
    "so much news about {} lately",
    "still thinking about {} tonight",
    "everyone here loves {}",
]
LOCAL_TWO = [
    "{} and {} were everywhere this week",
    "between {} and {} i cannot decide",
    "we talked about {} and {} for hours",
]
ENTITY_CUES = [
    "the famous singer {} released a new album .",
    "{} performed live at the stadium .",
    "fans of {} waited outside for hours .",
    "{} announced a world tour .",
    "critics praised {} for the show .",
    "the band {} signed with a label .",
]
NOUN_CUES = [
    "a {} is a common household object .",
    "people use the {} every day .",
    "the {} is usually made of wood .",
    "you can buy a {} at any store .",
    "an old {} was found in the kitchen .",
    "clean the {} with warm water .",
]


@dataclass
class ToyCorpus:
    train: list[ConllSentence]
    dev: list[ConllSentence]
    test: list[ConllSentence]
    paragraphs: list[tuple[str, str]]
    gazetteer: list[str]

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name in ("train", "dev", "test"):
            (out / f"{name}.conll").write_text(format_conll(getattr(self, name)), encoding="utf-8")
        (out / "wiki.jsonl").write_text(
            "".join(json.dumps({"id": i, "text": t}) + "\n" for i, t in self.paragraphs), encoding="utf-8")
        (out / "gazetteer.txt").write_text("".join(g + "\n" for g in self.gazetteer), encoding="utf-8")


def _reserved() -> set[str]:
    words = set()
    for t in LOCAL_ONE + LOCAL_TWO + ENTITY_CUES + NOUN_CUES:
        words.update(t.replace("{}", " ").split())
    return words


def make_toy_corpus(seed: int = 13, n_sentences: int = 200, split: tuple[int, int] = (120, 30),
                    two_slot_rate: float = 0.25, two_word_entity_rate: float = 0.3) -> ToyCorpus:
    rng = np.random.default_rng(seed)
    reserved = _reserved()
    used: set[str] = set()

    def word() -> str:
        while True:
            n = int(rng.integers(2, 4))
            w = "".join(CONSONANTS[rng.integers(len(CONSONANTS))] + VOWELS[rng.integers(len(VOWELS))]
                        for _ in range(n))
            if w not in used and w not in reserved:
                used.add(w)
                return w

    sentences: list[ConllSentence] = []
    paragraphs: list[tuple[str, str]] = []
    gazetteer: list[str] = []
    for _ in range(n_sentences):
        two = rng.random() < two_slot_rate
        template = (LOCAL_TWO if two else LOCAL_ONE)[rng.integers(len(LOCAL_TWO if two else LOCAL_ONE))]
        fills: list[tuple[list[str], bool]] = []
        for _slot in range(2 if two else 1):
            is_entity = bool(rng.random() < 0.5)
            n_words = 2 if is_entity and rng.random() < two_word_entity_rate else 1
            filler = [word() for _ in range(n_words)]
            fills.append((filler, is_entity))
            name = " ".join(filler)
            cues = ENTITY_CUES if is_entity else NOUN_CUES
            picked = rng.choice(len(cues), size=3, replace=False)
            paragraphs.append((f"p{len(paragraphs)}", " ".join(cues[i].format(name) for i in sorted(picked))))
            if is_entity:
                gazetteer.append(name)
        words: list[str] = []
        labels: list[str] = []
        pieces = template.split("{}")
        for k, piece in enumerate(pieces):
            for w in piece.split():
                words.append(w)
                labels.append("O")
            if k < len(fills):
                filler, is_entity = fills[k]
                for j, w in enumerate(filler):
                    words.append(w)
                    labels.append(("B" if j == 0 else "I") if is_entity else "O")
        sentences.append(ConllSentence(words, labels))

    n_train, n_dev = split
    order = rng.permutation(len(paragraphs))
    paragraphs = [paragraphs[i] for i in order]
    return ToyCorpus(sentences[:n_train], sentences[n_train:n_train + n_dev],
                     sentences[n_train + n_dev:], paragraphs, sorted(gazetteer))


def main(argv: list[str] | None = None) -> None:
    ap = argparse.ArgumentParser(description="write the synthetic retrieval-context corpus")
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=13)
    ap.add_argument("--sentences", type=int, default=200)
    args = ap.parse_args(argv)
    make_toy_corpus(args.seed, args.sentences).write(args.out_dir)


if __name__ == "__main__":
    main()
