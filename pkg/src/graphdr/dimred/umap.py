"""UMAP embedding on an exact k-nearest-neighbour graph.

The fuzzy neighbourhood graph uses per-point connectivity offsets (distance
to the nearest neighbour) and bandwidths bisected so each point's membership
strengths sum to log2(k). The layout minimises the fuzzy-set cross-entropy
by stochastic descent over edges with negative sampling.

Edges that fall due in the same epoch are applied together as one batched
update instead of one edge at a time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist

from ..linalg import make_rng
from .pca import pca_fit, pca_transform

__all__ = [
    "UmapConfig",
    "knn_graph",
    "smooth_knn",
    "fuzzy_membership",
    "fit_ab",
    "umap_cost",
    "umap_embed",
]

_SMOOTH_TOL = 1e-5
_MIN_SIGMA_SCALE = 1e-3


@dataclass(frozen=True)
class UmapConfig:
    n_neighbors: int = 15
    dims: int = 2
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int = 500
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be at least 2")
        if self.dims < 1:
            raise ValueError("dims must be positive")


def knn_graph(x, k, chunk=1024):
    """Exact Euclidean k nearest neighbours of every row, self excluded.

    Ties are broken by the lower index. Returns ``(indices, distances)``,
    both (n, k) and sorted by distance.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k={k} must satisfy 1 <= k < n={n}")
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for start in range(0, n, chunk):
        block = cdist(x[start:start + chunk], x)
        rows = np.arange(block.shape[0])
        block[rows, start + rows] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        idx[start:start + chunk] = order
        dist[start:start + chunk] = np.take_along_axis(block, order, axis=1)
    return idx, dist


def smooth_knn(distances, n_iter=64):
    """Per-point ``rho`` (nearest distance) and ``sigma`` by bisection.

    ``sigma_i`` solves sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k).
    """
    n, k = distances.shape
    target = np.log2(k)
    rho = distances[:, 0].copy()
    gap = np.maximum(distances - rho[:, None], 0.0)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    sigma = np.ones(n)
    for _ in range(n_iter):
        total = np.exp(-gap / sigma[:, None]).sum(axis=1)
        done = np.abs(total - target) < _SMOOTH_TOL
        if done.all():
            break
        over = (total > target) & ~done
        under = (total < target) & ~done
        hi[over] = sigma[over]
        sigma[over] = 0.5 * (lo[over] + hi[over])
        lo[under] = sigma[under]
        sigma[under] = np.where(np.isinf(hi[under]), sigma[under] * 2.0, 0.5 * (lo[under] + hi[under]))
    floor = _MIN_SIGMA_SCALE * np.where(rho > 0, distances.mean(axis=1), distances.mean())
    return rho, np.maximum(sigma, floor)


def fuzzy_membership(x, k):
    """Symmetric fuzzy union ``v_ij = a + b - a*b`` of directed memberships.

    Returns ``(V, directed)`` as scipy CSR matrices; ``directed[i, j]`` is
    v_{j|i}.
    """
    n = len(x)
    if not 2 <= k < n:
        raise ValueError(f"n_neighbors={k} must satisfy 2 <= k < n={n}")
    idx, dist = knn_graph(x, k)
    rho, sigma = smooth_knn(dist)
    vals = np.exp(-np.maximum(dist - rho[:, None], 0.0) / sigma[:, None])
    directed = sp.csr_matrix((vals.ravel(), (np.repeat(np.arange(n), k), idx.ravel())), shape=(n, n))
    t = directed.T.tocsr()
    union = (directed + t - directed.multiply(t)).tocsr()
    union.eliminate_zeros()
    union.sort_indices()
    return union, directed


def fit_ab(min_dist, spread=1.0):
    """Least-squares fit of 1/(1 + a d^(2b)) to the offset-exponential target curve."""
    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(lambda d, a, b: 1.0 / (1.0 + a * d ** (2 * b)), xv, yv, p0=(1.0, 1.0))
    return float(a), float(b)


def umap_cost(v, y, a, b, eps=1e-12):
    """Fuzzy-set cross-entropy between dense memberships ``v`` and the embedding ``y``."""
    v = v.toarray() if sp.issparse(v) else np.asarray(v)
    d2 = np.sum((y[:, None, :] - y[None, :, :]) ** 2, axis=-1)
    w = 1.0 / (1.0 + a * d2 ** b)
    off = ~np.eye(len(y), dtype=bool)
    v, w = v[off], np.clip(w[off], eps, 1 - eps)
    with np.errstate(divide="ignore", invalid="ignore"):
        attract = np.where(v > 0, v * np.log(v / w), 0.0)
        repel = np.where(v < 1, (1 - v) * np.log((1 - v) / (1 - w)), 0.0)
    return float(np.sum(attract + repel))


def _init_layout(x, dims, rng):
    if x.shape[1] >= dims and x.shape[0] > dims:
        y = pca_transform(pca_fit(x, dims), x)
        scale = np.abs(y).max()
        if scale > 0:
            return 10.0 * y / scale
    return rng.uniform(-10, 10, size=(x.shape[0], dims))


def _clip(v):
    return np.clip(v, -4.0, 4.0)


def umap_embed(x, cfg=UmapConfig(), return_graph=False):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 2 <= cfg.n_neighbors < n:
        raise ValueError(f"n_neighbors={cfg.n_neighbors} must satisfy 2 <= k < n={n}")
    rng = make_rng(cfg.seed, 21)
    graph, _ = fuzzy_membership(x, cfg.n_neighbors)
    a, b = fit_ab(cfg.min_dist, cfg.spread)
    coo = graph.tocoo()
    keep = coo.data >= coo.data.max() / cfg.n_epochs
    head, tail, weight = coo.row[keep], coo.col[keep], coo.data[keep]
    y = _init_layout(x, cfg.dims, rng)

    per_sample = weight.max() / weight
    per_negative = per_sample / cfg.negative_sample_rate
    next_sample = per_sample.copy()
    next_negative = per_negative.copy()
    for epoch in range(1, cfg.n_epochs + 1):
        alpha = cfg.learning_rate * (1.0 - (epoch - 1) / cfg.n_epochs)
        due = np.flatnonzero(next_sample <= epoch)
        if len(due) == 0:
            continue
        h, t = head[due], tail[due]
        diff = y[h] - y[t]
        d2 = np.sum(diff * diff, axis=1)
        coeff = np.zeros_like(d2)
        pos = d2 > 0
        coeff[pos] = -2.0 * a * b * d2[pos] ** (b - 1.0) / (a * d2[pos] ** b + 1.0)
        step = _clip(coeff[:, None] * diff) * alpha
        delta = np.zeros_like(y)
        np.add.at(delta, h, step)
        np.add.at(delta, t, -step)
        next_sample[due] += per_sample[due]

        n_neg = ((epoch - next_negative[due]) / per_negative[due]).astype(np.int64)
        n_neg = np.maximum(n_neg, 0)
        next_negative[due] += n_neg * per_negative[due]
        total = int(n_neg.sum())
        if total:
            src = np.repeat(h, n_neg)
            other = rng.integers(0, n, size=total)
            diff = y[src] - y[other]
            d2 = np.sum(diff * diff, axis=1)
            coeff = 2.0 * b / ((0.001 + d2) * (a * d2 ** b + 1.0))
            rep = np.where((d2 > 0)[:, None], _clip(coeff[:, None] * diff), 0.0)
            rep[(d2 == 0) & (src != other)] = 4.0
            np.add.at(delta, src, rep * alpha)
        y = y + delta
    if not np.all(np.isfinite(y)):
        raise FloatingPointError("UMAP layout produced non-finite coordinates")
    if return_graph:
        return y, graph, (a, b)
    return y
