"""Full-graph semi-supervised training with masked cross-entropy.

One epoch is one gradient step on the whole graph (the graph is the single
batch). Validation loss is measured in eval mode after every step, and
training stops once it has not strictly improved for ``patience`` epochs.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .linalg import make_rng
from .models import forward, init_params, prepare_graph

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TrainHistory",
    "TrainingDiverged",
    "EarlyStopping",
    "masked_cross_entropy",
    "accuracy",
    "sgd_step",
    "fit_params",
    "train",
    "write_history_csv",
]


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-1
    weight_decay: float = 2e-3
    momentum: float = 0.9
    dropout: float = 0.1
    patience: int = 5
    max_epochs: int = 200
    seed: int = 0
    restore_best: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0 or self.weight_decay < 0 or self.momentum < 0:
            raise ValueError("learning rate must be positive; weight decay and momentum nonnegative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be at least 1")

    @classmethod
    def for_kind(cls, kind, **overrides):
        """Defaults for a model kind: GraphConv trains at 1e-3, the rest at 1e-1."""
        if kind.lower() == "graphconv":
            overrides.setdefault("learning_rate", 1e-3)
        return cls(**overrides)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    best_epoch: int = 0  # 1-based
    stop_reason: str = ""

    @property
    def epochs(self):
        return len(self.val_loss)


class EarlyStopping:
    """Patience counter on a strictly decreasing validation loss."""

    def __init__(self, patience):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.epoch = 0
        self.bad_epochs = 0

    def update(self, loss):
        """Record one epoch; return True if it improved on the best loss."""
        self.epoch += 1
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, self.epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self):
        return self.bad_epochs >= self.patience


def masked_cross_entropy(logits, labels, mask):
    """Mean of -log softmax(logits)[label] over the rows selected by ``mask``.

    Rows outside the mask contribute nothing, and their gradient rows are
    exactly zero.
    """
    z = ad.value_of(logits)
    labels = np.asarray(labels)
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise ValueError("mask selects no nodes")
    y = labels[idx]
    if np.any(y < 0) or np.any(y >= z.shape[1]):
        raise ValueError(f"labels must lie in [0, {z.shape[1]})")
    shifted = z[idx] - z[idx].max(axis=1, keepdims=True)
    logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(len(idx))
    out = np.asarray(-logp[rows, y].mean())
    if not isinstance(logits, ad.Var):
        return out

    def backward(g):
        local = np.exp(logp)
        local[rows, y] -= 1.0
        full = np.zeros_like(z)
        full[idx] = local * (float(g) / len(idx))
        return (full,)

    return logits.tape.record(out, (logits,), backward)


def accuracy(logits, labels, mask):
    mask = np.asarray(mask, dtype=bool)
    pred = np.argmax(ad.value_of(logits)[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


def sgd_step(params, grads, velocity, cfg):
    """SGD with momentum and L2 weight decay folded into the gradient.

    ``g' = g + wd * p``, ``v = momentum * v + g'``, ``p = p - lr * v``.
    Returns new ``(params, velocity)`` dicts; inputs are not modified.
    """
    new_p, new_v = {}, {}
    for name, p in params.items():
        g = grads[name]
        if np.shape(g) != np.shape(p):
            raise ValueError(f"gradient for {name} has shape {np.shape(g)}, parameter {np.shape(p)}")
        g = g + cfg.weight_decay * p
        v = cfg.momentum * velocity.get(name, 0.0) + g
        new_v[name] = v
        new_p[name] = p - cfg.learning_rate * v
    return new_p, new_v


def fit_params(params, loss_fn, val_fn, cfg, rng=None):
    """Generic early-stopped SGD loop shared by the classifiers and the autoencoder.

    ``loss_fn(tape_params, rng)`` returns a scalar tape value for one
    full-batch step; ``val_fn(params)`` returns ``(val_loss, val_metric)``.
    """
    history = TrainHistory()
    stopper = EarlyStopping(cfg.patience)
    velocity = {}
    best = params
    for epoch in range(1, cfg.max_epochs + 1):
        tape = ad.Tape()
        tracked = {k: tape.param(v, k) for k, v in params.items()}
        loss = loss_fn(tracked, rng)
        loss_value = float(loss.value)
        if not np.isfinite(loss_value):
            raise TrainingDiverged(f"non-finite training loss at epoch {epoch}")
        grads = tape.backward(loss)
        grads = {k: grads[v] for k, v in tracked.items()}
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise TrainingDiverged(f"non-finite gradient at epoch {epoch}")
        params, velocity = sgd_step(params, grads, velocity, cfg)
        val_loss, val_metric = val_fn(params)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}")
        history.train_loss.append(loss_value)
        history.val_loss.append(float(val_loss))
        history.val_acc.append(float(val_metric))
        if stopper.update(val_loss):
            best = params
        if stopper.should_stop:
            history.stop_reason = "patience"
            break
    else:
        history.stop_reason = "max_epochs"
    history.best_epoch = stopper.best_epoch
    return (best if cfg.restore_best else params), history


def train(spec, ds, split, cfg, features=None):
    """Train ``spec`` on ``ds`` with labels visible only on ``split.train``.

    Returns the parameters of the lowest-validation-loss epoch (or the last
    epoch when ``cfg.restore_best`` is false) and the history.
    """
    spec = replace(spec, dropout_rate=cfg.dropout)
    graph = prepare_graph(ds.edges, ds.features if features is None else features)
    if graph.features.shape[1] != spec.in_dim:
        raise ValueError(f"features have {graph.features.shape[1]} columns, spec expects {spec.in_dim}")
    params = init_params(spec, make_rng(cfg.seed, 1))
    dropout_rng = make_rng(cfg.seed, 2)

    def loss_fn(tracked, rng):
        logits = forward(spec, tracked, graph, training=True, rng=rng)
        return masked_cross_entropy(logits, ds.labels, split.train)

    def val_fn(p):
        logits = forward(spec, p, graph, training=False)
        return float(masked_cross_entropy(logits, ds.labels, split.val)), accuracy(logits, ds.labels, split.val)

    params, history = fit_params(params, loss_fn, val_fn, cfg, dropout_rng)
    log.info("%s: stopped after %d epochs (%s), best epoch %d", spec.kind, history.epochs,
             history.stop_reason, history.best_epoch)
    return params, history


def write_history_csv(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "val_acc"])
        for i, row in enumerate(zip(history.train_loss, history.val_loss, history.val_acc), 1):
            w.writerow([i, *(repr(v) for v in row)])
