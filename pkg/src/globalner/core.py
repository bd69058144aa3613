"""Shared domain types, tokenization, BIO utilities and CoNLL I/O."""

from __future__ import annotations

import enum
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

_PUNCT = set(string.punctuation)
_WS_RUN = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int

    def __post_init__(self):
        if self.char_start >= self.char_end:
            raise ValueError(f"empty token span [{self.char_start}, {self.char_end})")
        if len(self.text) != self.char_end - self.char_start:
            raise ValueError(f"token {self.text!r} does not fit its offsets")


@dataclass(frozen=True, order=True)
class MentionSpan:
    token_start: int
    token_end: int

    def __post_init__(self):
        if not 0 <= self.token_start < self.token_end:
            raise ValueError(f"invalid span {self.token_start}..{self.token_end}")

    def __len__(self):
        return self.token_end - self.token_start

    def indices(self) -> range:
        return range(self.token_start, self.token_end)


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization with leading/trailing ASCII punctuation split off.

    Every punctuation character at either edge of a whitespace run becomes a
    token of its own; interior punctuation ("U.S", "don't") stays attached.
    """
    tokens: list[Token] = []
    for m in _WS_RUN.finditer(text):
        run, base = m.group(), m.start()
        lo, hi = 0, len(run)
        while lo < hi and run[lo] in _PUNCT:
            lo += 1
        while hi > lo and run[hi - 1] in _PUNCT:
            hi -= 1
        for i in range(lo):
            tokens.append(Token(run[i], base + i, base + i + 1))
        if lo < hi:
            tokens.append(Token(run[lo:hi], base + lo, base + hi))
        for i in range(hi, len(run)):
            tokens.append(Token(run[i], base + i, base + i + 1))
    return tokens


def tokens_from_words(words: Sequence[str]) -> tuple[list[Token], str]:
    """Build tokens for pre-tokenized input (e.g. CoNLL); the source is the space-joined words."""
    tokens, pos = [], 0
    for w in words:
        if not w or any(c.isspace() for c in w):
            raise ValueError(f"invalid word {w!r}")
        tokens.append(Token(w, pos, pos + len(w)))
        pos += len(w) + 1
    return tokens, " ".join(words)


def surface(tokens: Sequence[Token]) -> str:
    return " ".join(t.text for t in tokens)


@dataclass(frozen=True)
class LocalSentence:
    """A sentence to be tagged, with its detected (or gold) mention spans."""

    tokens: tuple[Token, ...]
    mentions: tuple[MentionSpan, ...] = ()
    text: str = ""
    sentence_id: str = ""
    doc_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "mentions", tuple(self.mentions))
        if not self.tokens:
            raise ValueError("sentence has no tokens")
        if not self.text:
            object.__setattr__(self, "text", surface(self.tokens))
        check_spans(self.mentions, len(self.tokens))

    @classmethod
    def from_text(cls, text: str, **kw) -> "LocalSentence":
        return cls(tuple(tokenize(text)), text=text, **kw)

    @classmethod
    def from_words(cls, words: Sequence[str], **kw) -> "LocalSentence":
        tokens, text = tokens_from_words(words)
        return cls(tuple(tokens), text=text, **kw)

    def with_mentions(self, mentions: Iterable[MentionSpan]) -> "LocalSentence":
        return LocalSentence(self.tokens, tuple(mentions), self.text, self.sentence_id, self.doc_id)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    def mention_text(self, span: MentionSpan) -> str:
        return surface(self.tokens[span.token_start:span.token_end])

    def mention_indices(self) -> list[int]:
        return sorted({i for m in self.mentions for i in m.indices()})

    def __len__(self):
        return len(self.tokens)


def check_spans(spans: Sequence[MentionSpan], length: int) -> None:
    prev_end = 0
    for s in spans:
        if s.token_end > length:
            raise ValueError(f"span {s} out of bounds for length {length}")
        if s.token_start < prev_end:
            raise ValueError("mention spans overlap or are unsorted")
        prev_end = s.token_end


class SourceKind(enum.Enum):
    INTERNET = "internet"
    WIKIPEDIA = "wikipedia"
    SOURCE_CORPUS = "corpus"


# Lower is more trusted.
_TRUST = {SourceKind.WIKIPEDIA: 0, SourceKind.SOURCE_CORPUS: 1, SourceKind.INTERNET: 2}


@dataclass(frozen=True)
class SourceTag:
    kind: SourceKind
    backend: str = ""

    @property
    def trust_rank(self) -> int:
        return _TRUST[self.kind]


@dataclass(frozen=True)
class ReferenceSentence:
    tokens: tuple[Token, ...]
    source: SourceTag
    origin_query: str
    raw_text: str
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("reference sentence has no tokens")

    @classmethod
    def from_text(cls, text: str, source: SourceTag, origin_query: str = "",
                  provenance: str = "") -> "ReferenceSentence":
        return cls(tuple(tokenize(text)), source, origin_query, text, provenance)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]


# ---------------------------------------------------------------------------
# BIO labels

@dataclass(frozen=True)
class BioLabel:
    tag: str
    entity_type: str | None = None

    def __post_init__(self):
        if self.tag not in ("B", "I", "O"):
            raise ValueError(f"unknown BIO tag {self.tag!r}")
        if self.tag == "O" and self.entity_type is not None:
            raise ValueError("O label cannot carry a type")

    @classmethod
    def parse(cls, s: str) -> "BioLabel":
        if s == "O":
            return cls("O")
        tag, sep, etype = s.partition("-")
        return cls(tag, etype if sep else None)

    def __str__(self):
        return self.tag if self.entity_type is None else f"{self.tag}-{self.entity_type}"


OUTSIDE = BioLabel("O")


def parse_labels(strings: Iterable[str]) -> list[BioLabel]:
    return [BioLabel.parse(s) for s in strings]


def bio_decode(labels: Sequence[BioLabel]) -> list[tuple[MentionSpan, str | None]]:
    """Extract maximal B-I* runs. An I that cannot continue an entity starts a new one."""
    out: list[tuple[MentionSpan, str | None]] = []
    start, etype = None, None
    for i, lab in enumerate(labels):
        continues = lab.tag == "I" and start is not None and lab.entity_type == etype
        if continues:
            continue
        if start is not None:
            out.append((MentionSpan(start, i), etype))
            start = None
        if lab.tag in ("B", "I"):
            start, etype = i, lab.entity_type
    if start is not None:
        out.append((MentionSpan(start, len(labels)), etype))
    return out


def bio_encode(spans: Sequence[tuple[MentionSpan, str | None]], length: int) -> list[BioLabel]:
    labels = [OUTSIDE] * length
    check_spans([s for s, _ in spans], length)
    for span, etype in spans:
        labels[span.token_start] = BioLabel("B", etype)
        for i in range(span.token_start + 1, span.token_end):
            labels[i] = BioLabel("I", etype)
    return labels


def strip_types(labels: Sequence[BioLabel]) -> list[BioLabel]:
    return [BioLabel(lab.tag) for lab in labels]


def is_valid_bio(labels: Sequence[BioLabel]) -> bool:
    prev = OUTSIDE
    for lab in labels:
        if lab.tag == "I" and (prev.tag == "O" or prev.entity_type != lab.entity_type):
            return False
        prev = lab
    return True


# ---------------------------------------------------------------------------
# CoNLL two-column files

class ConllFormatError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass
class ConllSentence:
    words: list[str]
    labels: list[str] = field(default_factory=list)

    def bio(self) -> list[BioLabel]:
        return parse_labels(self.labels)


def iter_conll(lines: Iterable[str]) -> Iterator[ConllSentence]:
    """Parse `token<TAB>label` lines; blank lines separate sentences."""
    words: list[str] = []
    labels: list[str] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            if words:
                yield ConllSentence(words, labels)
                words, labels = [], []
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConllFormatError(f"expected 'token<TAB>label', got {line!r}", line_no)
        try:
            BioLabel.parse(parts[1])
        except ValueError as exc:
            raise ConllFormatError(str(exc), line_no) from None
        words.append(parts[0])
        labels.append(parts[1])
    if words:
        yield ConllSentence(words, labels)


def read_conll(path: str | Path) -> list[ConllSentence]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_conll(fh))


def format_conll(sentences: Iterable[ConllSentence]) -> str:
    blocks = []
    for s in sentences:
        blocks.append("".join(f"{w}\t{lab}\n" for w, lab in zip(s.words, s.labels)))
    return "\n".join(blocks)


def write_conll(path: str | Path, sentences: Iterable[ConllSentence]) -> None:
    Path(path).write_text(format_conll(sentences), encoding="utf-8")


@dataclass
class Document:
    doc_id: str
    sentences: list[ConllSentence]

    def sentence_id(self, index: int) -> str:
        return f"{self.doc_id}:{index}"


def read_documents(path: str | Path) -> list[Document]:
    """Read a CoNLL or plain-text file as documents.

    CoNLL (``.conll``/``.bio``/``.tsv``): ``-DOCSTART-`` lines split documents,
    otherwise the file is one document. Plain text: one sentence per line,
    documents separated by blank lines; sentences are tokenized and carry no
    labels. Document ids are ``<file stem>-<n>``.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    chunks: list[list[ConllSentence]] = []
    if path.suffix.lower() in (".conll", ".bio", ".tsv"):
        pending: list[str] = []
        offset = 0
        for i, line in enumerate(lines + ["-DOCSTART-"]):
            if line.startswith("-DOCSTART-"):
                try:
                    sents = list(iter_conll(pending))
                except ConllFormatError as exc:
                    raise ConllFormatError(str(exc).split(": ", 1)[1], exc.line_no + offset) from None
                if sents:
                    chunks.append(sents)
                pending, offset = [], i + 1
            else:
                pending.append(line)
    else:
        current: list[ConllSentence] = []
        for line in lines + [""]:
            words = [t.text for t in tokenize(line)]
            if words:
                current.append(ConllSentence(words))
            elif current:
                chunks.append(current)
                current = []
    return [Document(f"{path.stem}-{i}", sents) for i, sents in enumerate(chunks)]
