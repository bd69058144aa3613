import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from globalner.core import LocalSentence, MentionSpan, iter_conll, parse_labels, read_conll, strip_types
from globalner.detector import Gazetteer, GoldMentionDetector, convert_dataset, detect_mentions
from globalner.queries import Query, QueryKind, generate_queries

TWEET = "black widow dresses up for london fashion week and party in style!"


def brute_force_greedy(words, entries):
    """Among all maximal non-overlapping matchings pick the lexicographically
    smallest by (start, -length), i.e. the leftmost-longest choice."""
    words = [w.lower() for w in words]
    cands = [(i, j) for i in range(len(words)) for j in range(i + 1, len(words) + 1)
             if tuple(words[i:j]) in entries]
    best = None
    for r in range(len(cands) + 1):
        for combo in itertools.combinations(cands, r):
            spans = sorted(combo)
            if any(a[1] > b[0] for a, b in zip(spans, spans[1:])):
                continue
            covered = {k for a, b in spans for k in range(a, b)}
            if any(not covered & set(range(a, b)) for a, b in cands):
                continue  # not maximal
            key = [(a, -(b - a)) for a, b in spans]
            if best is None or key < best[0]:
                best = (key, spans)
    return [MentionSpan(a, b) for a, b in best[1]]


def test_tweet_mentions():
    s = LocalSentence.from_text(TWEET)
    g = Gazetteer.from_strings(["black widow", "london fashion week"])
    spans = detect_mentions(s, g)
    assert [s.mention_text(m) for m in spans] == ["black widow", "london fashion week"]


def test_empty_gazetteer():
    assert detect_mentions(LocalSentence.from_text(TWEET), Gazetteer.from_strings([])) == []


def test_longest_match_new_york():
    s = LocalSentence.from_text("new york new york city")
    g = Gazetteer.from_strings(["new york", "new york city"])
    expected = brute_force_greedy(s.words, g.entries)
    assert expected == [MentionSpan(0, 2), MentionSpan(2, 5)]
    assert detect_mentions(s, g) == expected


@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=7),
       st.lists(st.lists(st.sampled_from("abc"), min_size=1, max_size=3), max_size=4))
def test_detect_matches_brute_force(words, entries):
    g = Gazetteer.from_strings(" ".join(e) for e in entries)
    s = LocalSentence.from_words(words)
    spans = detect_mentions(s, g)
    assert spans == brute_force_greedy(words, g.entries)
    for a, b in zip(spans, spans[1:]):
        assert a.token_end <= b.token_start


@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8),
       st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=3), max_size=3),
       st.lists(st.sampled_from("abcd"), min_size=1, max_size=3))
def test_adding_entry_keeps_non_overlapping_spans(words, entries, extra):
    s = LocalSentence.from_words(words)
    before = detect_mentions(s, Gazetteer.from_strings(" ".join(e) for e in entries))
    g2 = Gazetteer.from_strings([" ".join(e) for e in entries] + [" ".join(extra)])
    new = [(i, i + len(extra)) for i in range(len(words))
           if [w for w in words[i:i + len(extra)]] == extra]
    after = detect_mentions(s, g2)
    for span in before:
        if not any(a < span.token_end and span.token_start < b for a, b in new):
            assert span in after


def test_gazetteer_file(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("Black Widow\n\nlondon  fashion week\n")
    g = Gazetteer.load(p)
    assert g.entries == {("black", "widow"), ("london", "fashion", "week")}


def test_gold_detector():
    s = LocalSentence.from_text("a b c", sentence_id="s1")
    det = GoldMentionDetector({"s1": [MentionSpan(1, 3)]})
    assert det.detect(s) == [MentionSpan(1, 3)]
    assert det.detect(LocalSentence.from_text("x", sentence_id="other")) == []


def test_convert_dataset(fixtures):
    text = (fixtures / "wnut_style.conll").read_text()
    out = convert_dataset(text.splitlines(keepends=True))
    typed = read_conll(fixtures / "wnut_style.conll")
    untyped = list(iter_conll(out.splitlines(keepends=True)))
    assert len(untyped) == len(typed)
    for a, b in zip(typed, untyped):
        assert a.words == b.words
        assert b.labels == [str(x) for x in strip_types(parse_labels(a.labels))]
    assert "B-location" not in out and "\tB\n" in out


def test_convert_dataset_all_o_identical():
    src = "a\tO\nb\tO\n\nc\tO\n"
    assert convert_dataset(src.splitlines(keepends=True)) == src


def test_convert_dataset_reports_line():
    with pytest.raises(ValueError, match="line 2"):
        convert_dataset(["a\tO\n", "broken\n"])


# queries ------------------------------------------------------------------

def test_tweet_queries():
    s = LocalSentence.from_text(TWEET, mentions=(MentionSpan(0, 2), MentionSpan(5, 8)))
    qs = generate_queries(s)
    assert [q.text for q in qs] == [TWEET, "black widow", "london fashion week"]
    assert qs[0].kind is QueryKind.WHOLE_SENTENCE
    assert [q.mention_index for q in qs[1:]] == [0, 1]


def test_zero_mentions_single_query():
    assert len(generate_queries(LocalSentence.from_text("so tired today"))) == 1


def test_duplicate_mentions_collapse():
    s = LocalSentence.from_text("Paris then back to paris", mentions=(MentionSpan(0, 1), MentionSpan(4, 5)))
    qs = generate_queries(s)
    normalized = {q.text.lower() for q in qs[1:]}
    assert len(qs) == 1 + len(normalized) == 2
    assert qs[1].text == "Paris"


def test_query_invariants():
    with pytest.raises(ValueError):
        Query("  ", QueryKind.WHOLE_SENTENCE)
    with pytest.raises(ValueError):
        Query("x", QueryKind.MENTION)
    with pytest.raises(ValueError):
        Query("x", QueryKind.WHOLE_SENTENCE, 0)


@given(st.lists(st.sampled_from(["Ab", "ab", "cd", "e", "F"]), min_size=2, max_size=10), st.data())
def test_query_count_bound(words, data):
    n = len(words)
    cuts = sorted(data.draw(st.sets(st.integers(0, n), max_size=6)))
    spans = [MentionSpan(a, b) for a, b in zip(cuts[::2], cuts[1::2]) if a < b]
    s = LocalSentence.from_words(words, mentions=spans)
    qs = generate_queries(s)
    assert len(qs) <= len(spans) + 1
    mention_texts = [" ".join(words[m.token_start:m.token_end]) for m in spans]
    if len({t.lower() for t in mention_texts + [s.text]}) == len(spans) + 1:
        assert len(qs) == len(spans) + 1
    for q in qs[1:]:
        assert q.text == mention_texts[q.mention_index]
