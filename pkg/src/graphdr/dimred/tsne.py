"""Exact t-SNE.

Conditional Gaussian affinities are calibrated per point to a target
perplexity, symmetrised into joint probabilities, and matched by a Student-t
kernel in the embedding through gradient descent on KL(P || Q). All pairwise
terms are computed exactly, O(n^2) memory and time per iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..linalg import make_rng
from .pca import pca_fit, pca_transform

__all__ = [
    "TsneConfig",
    "TsneResult",
    "conditional_probabilities",
    "joint_probabilities",
    "student_t_affinities",
    "kl_divergence",
    "tsne",
    "tsne_embed",
]

_EPS = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 40.0
    dims: int = 2
    learning_rate: float = 200.0
    n_iter: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    init_std: float = 1e-4
    perplexity_tol: float = 1e-4
    max_search_iter: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.dims not in (2, 3):
            raise ValueError("t-SNE output dims must be 2 or 3")
        if self.perplexity <= 1.0:
            raise ValueError("perplexity must exceed 1")


@dataclass(frozen=True, eq=False)
class TsneResult:
    embedding: np.ndarray
    kl_initial: float
    kl_final: float
    kl_trace: tuple  # (iteration, KL) checkpoints, unexaggerated P
    perplexity_error: float  # worst |2^H - target| after calibration


def conditional_probabilities(dist2, perplexity, tol=1e-4, max_iter=50):
    """Row-stochastic p_{j|i} with a bisected precision per row.

    ``dist2`` is the full matrix of squared distances. Returns the matrix and
    the achieved perplexity of every row.
    """
    n = dist2.shape[0]
    off = ~np.eye(n, dtype=bool)
    d = dist2[off].reshape(n, n - 1)
    # Shift by the row minimum: cancels in the normalisation, avoids underflow.
    d = d - d.min(axis=1, keepdims=True)
    target = np.log(perplexity)
    beta = np.ones(n)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)

    def rows(b):
        w = np.exp(-d * b[:, None])
        s = w.sum(axis=1, keepdims=True)
        p = w / s
        h = np.log(s[:, 0]) + b * (d * p).sum(axis=1)
        return p, h

    p, h = rows(beta)
    for _ in range(max_iter):
        err = np.abs(np.exp(h) - perplexity)
        active = err > tol
        if not active.any():
            break
        too_flat = h > target  # entropy too high -> sharpen
        up = active & too_flat
        down = active & ~too_flat
        lo[up] = beta[up]
        beta[up] = np.where(np.isinf(hi[up]), beta[up] * 2.0, 0.5 * (beta[up] + hi[up]))
        hi[down] = beta[down]
        beta[down] = 0.5 * (beta[down] + lo[down])
        p_new, h_new = rows(beta)
        p[active], h[active] = p_new[active], h_new[active]
    out = np.zeros((n, n))
    out[off] = p.ravel()
    return out, np.exp(h)


def joint_probabilities(x, perplexity, tol=1e-4, max_iter=50):
    """Symmetric P with p_ij = (p_{j|i} + p_{i|j}) / 2n; returns (P, row perplexities)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if perplexity >= n - 1:
        raise ValueError(f"perplexity {perplexity} infeasible for {n} points (needs < n-1)")
    dist2 = squareform(pdist(x, "sqeuclidean"))
    cond, perp = conditional_probabilities(dist2, perplexity, tol, max_iter)
    return (cond + cond.T) / (2.0 * n), perp


def _sq_dists(y):
    s = np.sum(y * y, axis=1)
    d = s[:, None] + s[None, :] - 2.0 * (y @ y.T)
    np.maximum(d, 0.0, out=d)
    return d


def student_t_affinities(y):
    """Q matrix of the embedding and the unnormalised kernel values."""
    num = 1.0 / (1.0 + _sq_dists(y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(p, q):
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], _EPS))))


def _init_embedding(x, cfg):
    if x.shape[1] >= cfg.dims and x.shape[0] > cfg.dims:
        y = pca_transform(pca_fit(x, cfg.dims), x)
    else:
        y = make_rng(cfg.seed, 11).standard_normal((x.shape[0], cfg.dims))
    std = y.std()
    if std == 0:
        y = make_rng(cfg.seed, 11).standard_normal(y.shape)
        std = y.std()
    return y / std * cfg.init_std


def tsne(x, cfg=TsneConfig()):
    """Full t-SNE run; see :class:`TsneResult` for what is reported."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 5:
        raise ValueError("t-SNE needs at least 5 points")
    p, perp = joint_probabilities(x, cfg.perplexity, cfg.perplexity_tol, cfg.max_search_iter)
    y = _init_embedding(x, cfg)
    kl0 = kl_divergence(p, student_t_affinities(y)[0])
    trace = [(0, kl0)]
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    p_run = p * cfg.early_exaggeration
    for it in range(cfg.n_iter):
        if it == cfg.exaggeration_iters:
            p_run = p
        q, num = student_t_affinities(y)
        w = (p_run - np.maximum(q, _EPS)) * num
        grad = 4.0 * (w.sum(axis=1)[:, None] * y - w @ y)
        mom = cfg.momentum if it < cfg.momentum_switch else cfg.final_momentum
        same = (grad > 0) == (update > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = mom * update - cfg.learning_rate * gains * grad
        y = y + update
        y -= y.mean(axis=0)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"t-SNE diverged at iteration {it}")
        if (it + 1) % 50 == 0:
            trace.append((it + 1, kl_divergence(p, student_t_affinities(y)[0])))
    klf = kl_divergence(p, student_t_affinities(y)[0])
    if trace[-1][0] != cfg.n_iter:
        trace.append((cfg.n_iter, klf))
    return TsneResult(y, kl0, klf, tuple(trace), float(np.max(np.abs(perp - cfg.perplexity))))


def tsne_embed(x, cfg=TsneConfig()):
    return tsne(x, cfg).embedding
