import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from globalner.core import (
    BioLabel,
    ConllFormatError,
    LocalSentence,
    MentionSpan,
    bio_decode,
    bio_encode,
    is_valid_bio,
    iter_conll,
    parse_labels,
    read_documents,
    strip_types,
    tokenize,
)


def regex_tokenize(text):
    """Independent reference: split each whitespace run into leading punct, core, trailing punct."""
    out = []
    for run in text.split():
        m = re.fullmatch(r"([!-/:-@\[-`{-~]*)(.*?)([!-/:-@\[-`{-~]*)", run)
        lead, core, trail = m.groups()
        out += list(lead) + ([core] if core else []) + list(trail)
    return out


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("   \n\t") == []


def test_tokenize_simple_sentence():
    assert [t.text for t in tokenize("black widow dresses up")] == ["black", "widow", "dresses", "up"]


def test_tokenize_trailing_punct():
    assert [t.text for t in tokenize("style!")] == ["style", "!"]


def test_tokenize_interior_punct_kept():
    assert [t.text for t in tokenize('"U.S." don\'t')] == ['"', "U.S", ".", '"', "don't"]


@given(st.text(alphabet=st.sampled_from(list("ab .,!?'\"-() \t\nXyZ")), max_size=40))
def test_tokenize_offsets_and_reference(text):
    toks = tokenize(text)
    assert [t.text for t in toks] == regex_tokenize(text)
    for t in toks:
        assert text[t.char_start:t.char_end] == t.text
    starts = [t.char_start for t in toks]
    assert starts == sorted(set(starts))
    assert tokenize(text) == toks


def test_local_sentence_validates_spans():
    with pytest.raises(ValueError):
        LocalSentence.from_text("a b c", mentions=(MentionSpan(1, 4),))
    with pytest.raises(ValueError):
        LocalSentence.from_text("a b c", mentions=(MentionSpan(0, 2), MentionSpan(1, 3)))
    with pytest.raises(ValueError):
        LocalSentence.from_text("   ")


def L(*s):
    return parse_labels(s)


@pytest.mark.parametrize("labels, expected", [
    (L("O", "O", "O"), []),
    (L("B-loc", "I-loc", "O"), [(MentionSpan(0, 2), "loc")]),
    (L("O", "I-loc", "O"), [(MentionSpan(1, 2), "loc")]),
    (L("B-loc", "I-per"), [(MentionSpan(0, 1), "loc"), (MentionSpan(1, 2), "per")]),
    (L("B", "B", "I"), [(MentionSpan(0, 1), None), (MentionSpan(1, 3), None)]),
])
def test_bio_decode(labels, expected):
    assert bio_decode(labels) == expected


def conlleval_chunks(tags):
    """conlleval's start/end-of-chunk rules, written independently."""
    chunks, start, prev_tag, prev_type = [], None, "O", None
    for i, s in enumerate(tags + ["O"]):
        tag, _, typ = s.partition("-")
        typ = typ or None
        end = prev_tag in "BI" and (tag in "BO" or (tag == "I" and typ != prev_type))
        if end:
            chunks.append((start, i, prev_type))
        begins = tag == "B" or (tag == "I" and (prev_tag == "O" or typ != prev_type))
        if begins:
            start = i
        prev_tag, prev_type = tag, typ
    return chunks


@given(st.lists(st.sampled_from(["O", "B-a", "I-a", "B-b", "I-b"]), max_size=12))
def test_bio_decode_matches_conlleval_repair(tags):
    got = [(s.token_start, s.token_end, t) for s, t in bio_decode(parse_labels(tags))]
    assert got == conlleval_chunks(tags)


@st.composite
def span_lists(draw):
    n = draw(st.integers(1, 15))
    cuts = sorted(draw(st.sets(st.integers(0, n), max_size=8)))
    spans = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if a < b:
            spans.append((MentionSpan(a, b), draw(st.sampled_from([None, "x", "y"]))))
    return spans, n


@given(span_lists())
def test_bio_roundtrip(data):
    spans, n = data
    labels = bio_encode(spans, n)
    assert is_valid_bio(labels)
    assert bio_decode(labels) == spans


@given(st.lists(st.sampled_from(["O", "B-a", "I-a", "B", "I"]), max_size=10))
def test_strip_types_idempotent(tags):
    once = strip_types(parse_labels(tags))
    assert strip_types(once) == once
    assert [x.tag for x in once] == [t[0] for t in tags]


def test_strip_types_examples():
    assert strip_types(L("B-person")) == L("B")
    assert strip_types(L("O", "O")) == L("O", "O")
    assert strip_types(L("B-group", "I-group", "O", "B-loc")) == L("B", "I", "O", "B")


def test_biolabel_rejects_bad_input():
    with pytest.raises(ValueError):
        BioLabel.parse("X-foo")
    with pytest.raises(ValueError):
        BioLabel("O", "loc")


def test_conll_parse_and_errors():
    sents = list(iter_conll(["a\tB-x\n", "b\tO\n", "\n", "\n", "c\tO\n"]))
    assert [s.words for s in sents] == [["a", "b"], ["c"]]
    with pytest.raises(ConllFormatError, match="line 3"):
        list(iter_conll(["a\tO\n", "b\tO\n", "c O\n"]))
    with pytest.raises(ConllFormatError, match="line 1"):
        list(iter_conll(["a\tQ-x\n"]))


def test_read_documents_conll_and_text(tmp_path):
    c = tmp_path / "d.conll"
    c.write_text("-DOCSTART-\tO\n\na\tO\n\nb\tB\n-DOCSTART-\tO\n\nc\tO\n")
    docs = read_documents(c)
    assert [d.doc_id for d in docs] == ["d-0", "d-1"]
    assert [[s.words for s in d.sentences] for d in docs] == [[["a"], ["b"]], [["c"]]]
    t = tmp_path / "p.txt"
    t.write_text("Hello there!\nSecond line\n\nNew doc.\n")
    docs = read_documents(t)
    assert [len(d.sentences) for d in docs] == [2, 1]
    assert docs[0].sentences[0].words == ["Hello", "there", "!"]
    bad = tmp_path / "bad.conll"
    bad.write_text("a\tO\n-DOCSTART-\tO\nb O\n")
    with pytest.raises(ConllFormatError, match="line 3"):
        read_documents(bad)
