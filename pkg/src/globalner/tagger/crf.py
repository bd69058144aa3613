"""Linear-chain CRF over feature vectors, restricted to the masked-in positions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from ..core import BioLabel
from .assemble import AssembledInput

FORBIDDEN = -1e4
PARAM_NAMES = ("emission", "transitions", "start", "end")
CHECKPOINT_VERSION = 1

UNTYPED_LABELS = ("O", "B", "I")


def bio_penalties(labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Fixed additive scores forbidding I-x unless it follows B-x or I-x."""
    parsed = [BioLabel.parse(s) for s in labels]
    T = len(parsed)
    trans = np.zeros((T, T))
    start = np.zeros(T)
    for j, cur in enumerate(parsed):
        if cur.tag != "I":
            continue
        start[j] = FORBIDDEN
        for i, prev in enumerate(parsed):
            if prev.tag == "O" or prev.entity_type != cur.entity_type:
                trans[i, j] = FORBIDDEN
    return trans, start


@dataclass
class CrfModel:
    labels: tuple[str, ...]
    emission: np.ndarray      # (feature_dim, T)
    transitions: np.ndarray   # (T, T), [prev, cur]
    start: np.ndarray         # (T,)
    end: np.ndarray           # (T,)
    transition_penalty: np.ndarray = field(default=None)
    start_penalty: np.ndarray = field(default=None)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        T = len(self.labels)
        if self.transition_penalty is None:
            self.transition_penalty = np.zeros((T, T))
        if self.start_penalty is None:
            self.start_penalty = np.zeros(T)
        if self.emission.shape[1] != T or self.transitions.shape != (T, T):
            raise ValueError("parameter shapes do not match the label set")

    @classmethod
    def init(cls, labels: Sequence[str], feature_dim: int, seed: int = 0, scale: float = 0.01,
             constrain_bio: bool = True) -> "CrfModel":
        rng = np.random.default_rng(seed)
        T = len(labels)
        pen_t, pen_s = bio_penalties(labels) if constrain_bio else (None, None)
        return cls(tuple(labels), rng.normal(0, scale, (feature_dim, T)),
                   rng.normal(0, scale, (T, T)), np.zeros(T), np.zeros(T),
                   pen_t, pen_s, {"seed": seed})

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.emission.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "CrfModel":
        return replace(self, **{k: v.copy() for k, v in self.params().items()}, meta=dict(self.meta))

    def label_index(self, labels: Sequence[str]) -> np.ndarray:
        lookup = {lab: i for i, lab in enumerate(self.labels)}
        try:
            return np.array([lookup[lab] for lab in labels], dtype=int)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not in model label set") from None

    # scores over the effective (penalized) transition/start parameters
    def _trans(self) -> np.ndarray:
        return self.transitions + self.transition_penalty

    def _start(self) -> np.ndarray:
        return self.start + self.start_penalty

    def save(self, path: str | Path) -> None:
        """``.npz`` archive of named float64 arrays plus a JSON header."""
        header = {"format": "globalner-crf", "version": CHECKPOINT_VERSION,
                  "labels": list(self.labels), "meta": self.meta}
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header)),
                     transition_penalty=self.transition_penalty,
                     start_penalty=self.start_penalty, **self.params())

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        with np.load(path, allow_pickle=False) as data:
            missing = {"header", *PARAM_NAMES} - set(data.files)
            if missing:
                raise ValueError(f"{path} is not a CRF checkpoint (missing {', '.join(sorted(missing))})")
            header = json.loads(str(data["header"]))
            if header.get("format") != "globalner-crf":
                raise ValueError(f"{path} is not a CRF checkpoint")
            if header["version"] > CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {header['version']}")
            arrays = {k: data[k].copy() for k in (*PARAM_NAMES, "transition_penalty", "start_penalty")}
        return cls(tuple(header["labels"]), meta=header.get("meta", {}), **arrays)


# ---------------------------------------------------------------------------
# inference on an emission-score matrix (L, T)

def emission_scores(model: CrfModel, features: np.ndarray, positions: range | slice) -> np.ndarray:
    return features[positions] @ model.emission


def path_score(model: CrfModel, emissions: np.ndarray, path: Sequence[int]) -> float:
    path = np.asarray(path)
    trans = model._trans()
    s = model._start()[path[0]] + emissions[np.arange(len(path)), path].sum() + model.end[path[-1]]
    return float(s + trans[path[:-1], path[1:]].sum())


def _forward(model: CrfModel, emissions: np.ndarray) -> np.ndarray:
    trans = model._trans()
    alpha = np.empty_like(emissions)
    alpha[0] = model._start() + emissions[0]
    for t in range(1, len(emissions)):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + emissions[t]
    return alpha


def _backward(model: CrfModel, emissions: np.ndarray) -> np.ndarray:
    trans = model._trans()
    beta = np.empty_like(emissions)
    beta[-1] = model.end
    for t in range(len(emissions) - 2, -1, -1):
        beta[t] = logsumexp(trans + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(model: CrfModel, emissions: np.ndarray) -> float:
    if len(emissions) == 0:
        raise ValueError("empty sequence")
    return float(logsumexp(_forward(model, emissions)[-1] + model.end))


def viterbi(model: CrfModel, emissions: np.ndarray) -> tuple[list[int], float]:
    """Best path and its score; ties go to the lowest label index."""
    trans = model._trans()
    L = len(emissions)
    delta = model._start() + emissions[0]
    back = np.zeros((L, model.num_labels), dtype=int)
    for t in range(1, L):
        cand = delta[:, None] + trans
        back[t] = cand.argmax(axis=0)
        delta = cand[back[t], np.arange(model.num_labels)] + emissions[t]
    final = delta + model.end
    best = int(final.argmax())
    path = [best]
    for t in range(L - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(final[best])


# ---------------------------------------------------------------------------
# masked objectives over assembled inputs

def crf_log_partition(model: CrfModel, features: np.ndarray, positions: range) -> float:
    if len(positions) == 0:
        raise ValueError("no masked-in positions")
    return log_partition(model, emission_scores(model, features, positions))


def _check_gold(positions: range, gold: Sequence[int]) -> None:
    if len(gold) != len(positions):
        raise ValueError(f"gold has {len(gold)} labels for {len(positions)} local positions")


def crf_nll(model: CrfModel, features: np.ndarray, positions: range, gold: Sequence[int]) -> float:
    _check_gold(positions, gold)
    em = emission_scores(model, features, positions)
    return log_partition(model, em) - path_score(model, em, gold)


def crf_gradient(model: CrfModel, features: np.ndarray, positions: range,
                 gold: Sequence[int]) -> tuple[float, dict[str, np.ndarray]]:
    """NLL and its exact gradient: expected counts under the model minus gold counts."""
    _check_gold(positions, gold)
    gold = np.asarray(gold, dtype=int)
    feats = features[positions]
    em = feats @ model.emission
    L, T = em.shape
    alpha = _forward(model, em)
    beta = _backward(model, em)
    log_z = float(logsumexp(alpha[-1] + model.end))
    unary = np.exp(alpha + beta - log_z)
    onehot = np.zeros((L, T))
    onehot[np.arange(L), gold] = 1.0
    d_em = unary - onehot

    d_trans = np.zeros((T, T))
    trans = model._trans()
    for t in range(1, L):
        pair = alpha[t - 1][:, None] + trans + (em[t] + beta[t])[None, :] - log_z
        d_trans += np.exp(pair)
    np.add.at(d_trans, (gold[:-1], gold[1:]), -1.0)

    grads = {
        "emission": feats.T @ d_em,
        "transitions": d_trans,
        "start": d_em[0].copy(),
        "end": d_em[-1].copy(),
    }
    return log_z - path_score(model, em, gold), grads


class Tagger:
    """A CRF model paired with the feature provider it was trained on."""

    def __init__(self, model: CrfModel, provider):
        if provider.dim != model.feature_dim:
            raise ValueError(f"provider dim {provider.dim} != model feature dim {model.feature_dim}")
        self.model = model
        self.provider = provider

    def features(self, inp: AssembledInput) -> np.ndarray:
        return self.provider.featurize(inp)

    def nll(self, inp: AssembledInput, gold: Sequence[str]) -> float:
        return crf_nll(self.model, self.features(inp), inp.local_range, self.model.label_index(gold))

    def decode(self, inp: AssembledInput) -> list[str]:
        return viterbi_decode(self.model, self.features(inp), inp.local_range)


def viterbi_decode(model: CrfModel, features: np.ndarray, positions: range) -> list[str]:
    path, _ = viterbi(model, emission_scores(model, features, positions))
    return [model.labels[i] for i in path]
