from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import autodiff as ad
from ..linalg import make_rng
from ..trainer import TrainConfig, TrainHistory, fit_params

__all__ = ["AeModel", "ae_train", "ae_encode", "ae_decode", "column_rms", "bottleneck_sweep", "knee_size",
           "write_sweep_csv"]


@dataclass(frozen=True, eq=False)
class AeModel:
    """Single-layer encoder ``d -> bottleneck`` and linear decoder back to ``d``."""

    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray
    activation: str = "relu"
    scale: np.ndarray | None = None
    history: TrainHistory | None = field(default=None, compare=False, repr=False)

    @property
    def bottleneck(self):
        return self.w_enc.shape[1]

    @property
    def in_dim(self):
        return self.w_enc.shape[0]

    def params(self):
        return {"w_enc": self.w_enc, "b_enc": self.b_enc, "w_dec": self.w_dec, "b_dec": self.b_dec}


def _encode(p, x, activation):
    z = ad.add(ad.matmul(x, p["w_enc"]), p["b_enc"])
    return ad.relu(z) if activation == "relu" else z


def _decode(p, z):
    return ad.add(ad.matmul(z, p["w_dec"]), p["b_dec"])


def column_rms(x):
    """Root mean square of each column; all-zero columns get 1."""
    if sp.issparse(x):
        sq = np.asarray(x.multiply(x).mean(axis=0)).ravel()
    else:
        sq = np.mean(np.asarray(x, dtype=np.float64) ** 2, axis=0)
    rms = np.sqrt(sq)
    rms[rms == 0] = 1.0
    return rms


def _scaled(x, scale):
    if scale is None:
        return sp.csr_matrix(x, dtype=np.float64) if sp.issparse(x) else np.asarray(x, dtype=np.float64)
    if sp.issparse(x):
        return sp.csr_matrix(x, dtype=np.float64) @ sp.diags(1.0 / scale)
    return np.asarray(x, dtype=np.float64) / scale


def ae_encode(model, x):
    if x.shape[1] != model.in_dim:
        raise ValueError(f"expected {model.in_dim} columns, got {x.shape[1]}")
    x = _scaled(x, model.scale)
    if sp.issparse(x):
        x = sp.csr_matrix(x)
    return np.asarray(_encode(model.params(), x, model.activation))


def ae_decode(model, z):
    """Reconstruction in the original feature units."""
    if z.shape[1] != model.bottleneck:
        raise ValueError(f"expected {model.bottleneck} columns, got {z.shape[1]}")
    out = np.asarray(_decode(model.params(), z))
    return out if model.scale is None else out * model.scale


def _init(d, k, rng):
    limit = np.sqrt(6.0 / (d + k))
    return {
        "w_enc": rng.uniform(-limit, limit, (d, k)),
        "b_enc": np.zeros(k),
        "w_dec": rng.uniform(-limit, limit, (k, d)),
        "b_dec": np.zeros(d),
    }


def ae_train(x, bottleneck, split, cfg=None, activation="relu", init=None, scaling="rms"):
    """Fit the autoencoder to reconstruct every node's features (MSE).

    All rows are used for the gradient steps; the MSE on ``split.val`` rows
    drives early stopping and is what a bottleneck sweep compares.
    ``init`` may supply starting parameters (same keys as
    :meth:`AeModel.params`).

    With ``scaling="rms"`` every column is divided by its root mean square
    before training (no centering, so sparse input stays sparse) and the
    loss is measured in those units. Sparse bag-of-words columns are mostly
    zero; unscaled, their per-entry MSE gradients are so small that plain
    SGD barely moves within a few hundred epochs, and raising the step size
    kills ReLU units instead. The scale is stored on the model and applied
    again by :func:`ae_encode`.
    """
    cfg = cfg or TrainConfig()
    if activation not in ("relu", "linear"):
        raise ValueError(f"unsupported activation {activation!r}")
    if scaling not in ("rms", "none"):
        raise ValueError(f"unsupported scaling {scaling!r}")
    n, d = x.shape
    if not 1 <= bottleneck <= d:
        raise ValueError(f"bottleneck {bottleneck} must lie in [1, {d}]")
    scale = column_rms(x) if scaling == "rms" else None
    feats = _scaled(x, scale)
    dense = feats.toarray() if sp.issparse(feats) else feats
    val_rows = np.flatnonzero(split.val)
    if len(val_rows) == 0:
        raise ValueError("validation split is empty")
    params = init if init is not None else _init(d, bottleneck, make_rng(cfg.seed, 31))
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}

    def loss_fn(tracked, _rng):
        return ad.mse(_decode(tracked, _encode(tracked, feats, activation)), dense)

    x_val, target_val = feats[val_rows], dense[val_rows]

    def val_fn(p):
        m = float(ad.mse(_decode(p, _encode(p, x_val, activation)), target_val))
        return m, m

    params, history = fit_params(params, loss_fn, val_fn, cfg)
    return AeModel(activation=activation, scale=scale, history=history, **params)


def bottleneck_sweep(x, split, sizes, cfg=None, activation="relu", scaling="rms"):
    """Train one autoencoder per size under a shared seed; returns ``[(size, val_mse)]``."""
    sizes = list(sizes)
    if not sizes:
        raise ValueError("no bottleneck sizes given")
    out = []
    for k in sizes:
        model = ae_train(x, k, split, cfg, activation, scaling=scaling)
        out.append((k, min(model.history.val_loss)))
    return out


def knee_size(sweep):
    """Size with the largest second difference of validation MSE.

    On a decreasing convex curve that is where the steep drop gives way to
    the plateau. Needs at least three sizes; returns None otherwise.
    """
    pts = sorted(sweep)
    if len(pts) < 3:
        return None
    mse = np.array([m for _, m in pts])
    second = mse[:-2] - 2.0 * mse[1:-1] + mse[2:]
    return pts[1 + int(np.argmax(second))][0]


def write_sweep_csv(sweep, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["size", "val_mse"])
        for k, m in sweep:
            w.writerow([k, repr(float(m))])
