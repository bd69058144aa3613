"""Mini-batch Adam training for the masked CRF tagger."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..metrics import micro_prf
from .assemble import AssembledInput
from .crf import CrfModel, crf_gradient, viterbi_decode

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class OptimizerConfig:
    epochs: int = 20
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-6
    batch_size: int = 2
    accumulation: int = 4
    linear_decay: bool = True
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.accumulation < 1:
            raise ValueError("epochs >= 0, batch_size >= 1 and accumulation >= 1 required")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], beta1: float, beta2: float, eps: float):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            p -= lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class Example:
    features: np.ndarray
    positions: range
    gold: np.ndarray


@dataclass
class TrainResult:
    model: CrfModel
    epoch_losses: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0


def prepare(model: CrfModel, provider, data: Sequence[tuple[AssembledInput, Sequence[str]]]) -> list[Example]:
    return [Example(provider.featurize(inp), inp.local_range, model.label_index(gold)) for inp, gold in data]


def dataset_loss(model: CrfModel, examples: Sequence[Example]) -> float:
    return float(np.mean([crf_gradient(model, e.features, e.positions, e.gold)[0] for e in examples]))


def _dev_f1(model: CrfModel, dev: Sequence[Example]) -> float:
    gold = [[model.labels[i] for i in e.gold] for e in dev]
    pred = [viterbi_decode(model, e.features, e.positions) for e in dev]
    return micro_prf(gold, pred).f1


def train(model: CrfModel, provider, data: Sequence[tuple[AssembledInput, Sequence[str]]],
          cfg: OptimizerConfig | None = None,
          dev: Sequence[tuple[AssembledInput, Sequence[str]]] | None = None) -> TrainResult:
    """Adam over mini-batches with gradient accumulation and linear lr decay.

    One optimizer step covers ``batch_size * accumulation`` sentences; the
    gradient is their mean. With a dev set the model with the best dev
    micro-F1 (earliest on ties) is returned, otherwise the last one.
    The input model is not modified.
    """
    cfg = cfg or OptimizerConfig()
    if not data:
        raise ValueError("empty training set")
    examples = prepare(model, provider, data)
    dev_examples = prepare(model, provider, dev) if dev else []
    model = model.copy()
    result = TrainResult(model.copy())
    if cfg.epochs == 0:
        return result

    rng = np.random.default_rng(cfg.seed)
    per_step = cfg.batch_size * cfg.accumulation
    steps_per_epoch = -(-len(examples) // per_step)
    total_steps = steps_per_epoch * cfg.epochs
    params = model.params()
    opt = Adam(params, cfg.beta1, cfg.beta2, cfg.eps)
    best_f1 = -1.0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(examples))
        losses = []
        for s in range(steps_per_epoch):
            chunk = order[s * per_step:(s + 1) * per_step]
            grads = {k: np.zeros_like(v) for k, v in params.items()}
            for idx in chunk:
                e = examples[idx]
                loss, g = crf_gradient(model, e.features, e.positions, e.gold)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss {loss} at epoch {epoch}, step {result.steps}, example {idx}")
                losses.append(loss)
                for k in grads:
                    grads[k] += g[k]
            for k in grads:
                grads[k] /= len(chunk)
                if cfg.l2:
                    grads[k] += cfg.l2 * params[k]
            lr = cfg.lr * (1.0 - result.steps / total_steps) if cfg.linear_decay else cfg.lr
            opt.step(params, grads, lr)
            result.steps += 1
        result.epoch_losses.append(float(np.mean(losses)))
        if dev_examples:
            f1 = _dev_f1(model, dev_examples)
            result.dev_f1.append(f1)
            if f1 > best_f1:
                best_f1, result.best_epoch, result.model = f1, epoch, model.copy()
        log.debug("epoch %d loss %.5f", epoch, result.epoch_losses[-1])

    if not dev_examples:
        result.model, result.best_epoch = model.copy(), cfg.epochs
    result.model.meta.update({"train_seed": cfg.seed, "best_epoch": result.best_epoch})
    return result


__all__ = ["Adam", "OptimizerConfig", "TrainResult", "TrainingDivergedError", "train"]
