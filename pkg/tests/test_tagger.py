import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from globalner.core import LocalSentence, ReferenceSentence, SourceKind, SourceTag, is_valid_bio, parse_labels
from globalner.encoder import HashNgramEncoder
from globalner.tagger import (
    CLS,
    SEP,
    CrfModel,
    OptimizerConfig,
    Tagger,
    TokenFeatures,
    TrainingDivergedError,
    WindowFeatures,
    assemble_masked_input,
    crf_gradient,
    crf_log_partition,
    crf_nll,
    train,
    viterbi,
    viterbi_decode,
)
from globalner.tagger.crf import FORBIDDEN, emission_scores, path_score

WEB = SourceTag(SourceKind.INTERNET, "web")


def ref(text):
    return ReferenceSentence.from_text(text, WEB)


# assembly ---------------------------------------------------------------------

def test_assemble_basic():
    local = LocalSentence.from_text("a b c")
    inp = assemble_masked_input(local, [ref("x y")])
    assert [t.text for t in inp.tokens] == ["[C]", "a", "b", "c", "[S]", "x", "y"]
    assert inp.mask == (False, True, True, True, False, False, False)
    assert inp.tokens[0] == CLS and inp.tokens[4] == SEP


def test_assemble_no_references():
    inp = assemble_masked_input(LocalSentence.from_text("a b c"), [])
    assert len(inp) == 4 and not inp.has_references
    assert [t.text for t in inp.tokens] == ["[C]", "a", "b", "c"]


def test_assemble_budget_truncates_tail():
    local = LocalSentence.from_text("a b c")
    inp = assemble_masked_input(local, [ref("x y"), ref("z w")], budget=6)
    assert [t.text for t in inp.tokens] == ["[C]", "a", "b", "c", "[S]", "x"]
    # room for the marker but no reference token: no [S]
    assert len(assemble_masked_input(local, [ref("x")], budget=5)) == 4
    with pytest.raises(ValueError):
        assemble_masked_input(local, [], budget=3)


@settings(max_examples=50)
@given(st.integers(1, 8), st.lists(st.integers(1, 6), max_size=5), st.integers(9, 40))
def test_assemble_invariants(n, ref_lens, budget):
    local = LocalSentence.from_words([f"w{i}" for i in range(n)])
    refs = [ref(" ".join(f"r{k}_{j}" for j in range(m))) for k, m in enumerate(ref_lens)]
    inp = assemble_masked_input(local, refs, budget)
    assert len(inp) <= budget
    assert sum(inp.mask) == n
    assert [inp.tokens[i] for i in inp.local_range] == list(local.tokens)
    assert inp.mask_array[1:n + 1].all() and not inp.mask_array[n + 1:].any()


# CRF oracles --------------------------------------------------------------------

def random_model(rng, T, D, constrain=False):
    labels = ["O", "B", "I", "B-x", "I-x"][:T] if constrain else [f"L{i}" for i in range(T)]
    m = CrfModel.init(labels, D, constrain_bio=constrain)
    m.emission = rng.normal(size=(D, T))
    m.transitions = rng.normal(size=(T, T))
    m.start = rng.normal(size=T)
    m.end = rng.normal(size=T)
    return m


def brute_scores(model, em):
    """Score of every label sequence, written out longhand."""
    L, T = em.shape
    out = {}
    for path in itertools.product(range(T), repeat=L):
        s = model.start[path[0]] + model.start_penalty[path[0]] + model.end[path[-1]]
        for t, y in enumerate(path):
            s += em[t, y]
            if t:
                s += model.transitions[path[t - 1], y] + model.transition_penalty[path[t - 1], y]
        out[path] = s
    return out


@pytest.mark.parametrize("seed", range(25))
def test_crf_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    T, L, D = int(rng.integers(2, 5)), int(rng.integers(1, 6)), 3
    model = random_model(rng, T, D, constrain=seed % 3 == 0 and T >= 3)
    feats = rng.normal(size=(L + 2, D))
    pos = range(1, L + 1)
    em = emission_scores(model, feats, pos)
    scores = brute_scores(model, em)
    log_z = logsumexp(list(scores.values()))
    assert crf_log_partition(model, feats, pos) == pytest.approx(log_z, abs=1e-8)
    gold = list(rng.integers(0, T, size=L))
    assert crf_nll(model, feats, pos, gold) == pytest.approx(log_z - scores[tuple(gold)], abs=1e-8)
    best = max(scores.values())
    path, score = viterbi(model, em)
    assert score == pytest.approx(best, abs=1e-8)
    assert tuple(path) == min(p for p, s in scores.items() if s >= best - 1e-9)
    assert path_score(model, em, path) == pytest.approx(score, abs=1e-9)


def test_log_partition_hand_values():
    m = CrfModel(("A", "B"), np.zeros((1, 2)), np.zeros((2, 2)), np.zeros(2), np.zeros(2))
    feats = np.array([[0.0], [2.0]])
    m.emission = np.array([[1.0, 0.5]])
    # single position, emissions (2, 1): log(e^2 + e)
    assert crf_log_partition(m, feats, range(1, 2)) == pytest.approx(np.log(np.e ** 2 + np.e), abs=1e-12)
    zero = CrfModel(("A", "B"), np.zeros((1, 2)), np.zeros((2, 2)), np.zeros(2), np.zeros(2))
    assert crf_log_partition(zero, np.zeros((2, 1)), range(2)) == pytest.approx(np.log(4), abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_gradient_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    T, L, D = int(rng.integers(2, 5)), int(rng.integers(1, 6)), 3
    model = random_model(rng, T, D)
    feats = rng.normal(size=(L + 1, D))
    pos = range(1, L + 1)
    gold = list(rng.integers(0, T, size=L))
    _, grads = crf_gradient(model, feats, pos, gold)
    h = 1e-5
    for name, param in model.params().items():
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + h
            up = crf_nll(model, feats, pos, gold)
            param[idx] = old - h
            down = crf_nll(model, feats, pos, gold)
            param[idx] = old
            fd = (up - down) / (2 * h)
            assert abs(grads[name][idx] - fd) <= 1e-4 * max(1.0, abs(fd)), (name, idx)


def test_gold_length_mismatch():
    model = random_model(np.random.default_rng(0), 2, 2)
    with pytest.raises(ValueError):
        crf_nll(model, np.zeros((3, 2)), range(1, 3), [0])
    with pytest.raises(ValueError):
        crf_log_partition(model, np.zeros((3, 2)), range(1, 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_constrained_decoding_is_valid_bio(seed):
    rng = np.random.default_rng(seed)
    model = CrfModel.init(["O", "B-a", "I-a", "B-b", "I-b"], 4, seed=seed, scale=3.0)
    feats = rng.normal(size=(int(rng.integers(1, 10)), 4)) * 3
    labels = viterbi_decode(model, feats, range(len(feats)))
    assert is_valid_bio(parse_labels(labels))


def test_bio_penalty_values():
    m = CrfModel.init(["O", "B", "I"], 2)
    assert m.start_penalty.tolist() == [0, 0, FORBIDDEN]
    assert m.transition_penalty[0, 2] == FORBIDDEN and m.transition_penalty[1, 2] == 0


# masking ------------------------------------------------------------------------

def test_mask_invariance_token_features():
    enc = HashNgramEncoder(16)
    tagger = Tagger(CrfModel.init(["O", "B", "I"], 17, seed=4, scale=1.0), TokenFeatures(enc))
    local = LocalSentence.from_text("black widow dresses up")
    a = assemble_masked_input(local, [ref("black widow spider"), ref("marvel film")])
    b = assemble_masked_input(local, [ref("completely different words here ok")])
    gold = ["B", "I", "O", "O"]
    assert tagger.nll(a, gold) == tagger.nll(b, gold)
    assert tagger.decode(a) == tagger.decode(b)


def test_window_features_see_context():
    enc = HashNgramEncoder(16)
    prov = WindowFeatures(enc, width=1)
    local = LocalSentence.from_text("met zorblax today")
    a = prov.featurize(assemble_masked_input(local, [ref("president zorblax said")]))
    b = prov.featurize(assemble_masked_input(local, [ref("nothing related")]))
    assert a.shape[1] == prov.dim == 3 * 16 + 1 + 2 * 16 + 1
    assert not np.array_equal(a[2], b[2])
    assert a[2, -2] == 1.0 and b[2, -2] == 0.0


# checkpoints --------------------------------------------------------------------

def test_checkpoint_roundtrip(tmp_path):
    m = CrfModel.init(["O", "B-x", "I-x"], 5, seed=9, scale=1.0)
    m.meta["note"] = "hi"
    p = tmp_path / "m.npz"
    m.save(p)
    back = CrfModel.load(p)
    assert back.labels == m.labels and back.meta["note"] == "hi"
    for name in ("emission", "transitions", "start", "end", "transition_penalty", "start_penalty"):
        assert np.array_equal(getattr(back, name), getattr(m, name))


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.npz"
    np.savez(p, emission=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        CrfModel.load(p)


# training -----------------------------------------------------------------------

def separable_data():
    enc = HashNgramEncoder(16)
    prov = TokenFeatures(enc)
    sents = [("alice met bob", ["B", "O", "B"]), ("bob likes tea", ["B", "O", "O"]),
             ("tea with alice", ["O", "O", "B"]), ("carol met alice", ["B", "O", "B"]),
             ("likes carol", ["O", "B"]), ("with bob", ["O", "B"])]
    data = [(assemble_masked_input(LocalSentence.from_text(t), []), g) for t, g in sents]
    return prov, data


def test_training_fits_separable_toy():
    prov, data = separable_data()
    model = CrfModel.init(["O", "B", "I"], prov.dim, seed=0)
    res = train(model, prov, data, OptimizerConfig(epochs=40, lr=0.1), dev=data)
    assert res.epoch_losses[-1] < res.epoch_losses[0]
    assert max(res.dev_f1) == 1.0
    assert res.dev_f1[res.best_epoch - 1] == 1.0
    tagger = Tagger(res.model, prov)
    assert [tagger.decode(inp) for inp, _ in data] == [g for _, g in data]


def test_gradient_small_after_convergence():
    prov, data = separable_data()
    model = CrfModel.init(["O", "B", "I"], prov.dim, seed=0)
    res = train(model, prov, data, OptimizerConfig(epochs=300, lr=0.1, l2=0.01))
    total = {k: np.zeros_like(v) for k, v in res.model.params().items()}
    for inp, gold in data:
        _, g = crf_gradient(res.model, prov.featurize(inp), inp.local_range, res.model.label_index(gold))
        for k in total:
            total[k] += g[k] / len(data)
    for k in total:
        total[k] += 0.01 * res.model.params()[k]
    assert max(np.abs(v).max() for v in total.values()) < 1e-2


def test_zero_epochs_returns_initial_model():
    prov, data = separable_data()
    model = CrfModel.init(["O", "B", "I"], prov.dim, seed=0)
    res = train(model, prov, data, OptimizerConfig(epochs=0))
    for k, v in model.params().items():
        assert np.array_equal(res.model.params()[k], v)


def test_training_does_not_mutate_input_and_is_deterministic():
    prov, data = separable_data()
    model = CrfModel.init(["O", "B", "I"], prov.dim, seed=0)
    before = {k: v.copy() for k, v in model.params().items()}
    a = train(model, prov, data, OptimizerConfig(epochs=3))
    b = train(model, prov, data, OptimizerConfig(epochs=3))
    for k, v in before.items():
        assert np.array_equal(model.params()[k], v)
        assert np.array_equal(a.model.params()[k], b.model.params()[k])
    assert a.steps == 3  # 6 sentences, 8 per step


def test_nan_loss_raises():
    prov, data = separable_data()
    model = CrfModel.init(["O", "B", "I"], prov.dim, seed=0)
    model.emission[0, 0] = np.nan
    with pytest.raises(TrainingDivergedError, match="epoch 1"):
        train(model, prov, data, OptimizerConfig(epochs=1))
