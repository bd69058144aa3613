"""Mention detection: gazetteer longest-match baseline and gold-span passthrough."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .core import (
    ConllSentence,
    LocalSentence,
    MentionSpan,
    format_conll,
    iter_conll,
    parse_labels,
    strip_types,
)


class MentionDetector(Protocol):
    def detect(self, sentence: LocalSentence) -> list[MentionSpan]: ...


@dataclass(frozen=True)
class Gazetteer:
    entries: frozenset[tuple[str, ...]]

    def __post_init__(self):
        if any(len(e) == 0 for e in self.entries):
            raise ValueError("gazetteer entries must be non-empty")

    @classmethod
    def from_strings(cls, items: Iterable[str]) -> "Gazetteer":
        entries = {tuple(s.lower().split()) for s in items}
        entries.discard(())
        return cls(frozenset(entries))

    @classmethod
    def load(cls, path: str | Path) -> "Gazetteer":
        with open(path, encoding="utf-8") as fh:
            return cls.from_strings(line for line in fh if line.strip())

    @property
    def max_len(self) -> int:
        return max((len(e) for e in self.entries), default=0)

    def __len__(self):
        return len(self.entries)


def detect_mentions(sentence: LocalSentence, gazetteer: Gazetteer) -> list[MentionSpan]:
    """Greedy left-to-right longest match, case-insensitive."""
    words = [w.lower() for w in sentence.words]
    n, longest = len(words), gazetteer.max_len
    spans: list[MentionSpan] = []
    i = 0
    while i < n:
        for length in range(min(longest, n - i), 0, -1):
            if tuple(words[i:i + length]) in gazetteer.entries:
                spans.append(MentionSpan(i, i + length))
                i += length
                break
        else:
            i += 1
    return spans


class GazetteerDetector:
    def __init__(self, gazetteer: Gazetteer):
        self.gazetteer = gazetteer

    def detect(self, sentence: LocalSentence) -> list[MentionSpan]:
        return detect_mentions(sentence, self.gazetteer)


class GoldMentionDetector:
    """Returns externally supplied spans, keyed by sentence id."""

    def __init__(self, spans: Mapping[str, Sequence[MentionSpan]]):
        self.spans = dict(spans)

    def detect(self, sentence: LocalSentence) -> list[MentionSpan]:
        return list(self.spans.get(sentence.sentence_id, ()))


def convert_dataset(lines: Iterable[str]) -> str:
    """Typed CoNLL → untyped CoNLL (B-location → B); sentence boundaries kept."""
    out = []
    for sent in iter_conll(lines):
        untyped = [str(lab) for lab in strip_types(parse_labels(sent.labels))]
        out.append(ConllSentence(sent.words, untyped))
    return format_conll(out)


def convert_dataset_file(src: str | Path, dst: str | Path) -> None:
    with open(src, encoding="utf-8") as fh:
        text = convert_dataset(fh)
    Path(dst).write_text(text, encoding="utf-8")
