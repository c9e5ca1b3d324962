from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..linalg import eigh_symmetric

__all__ = ["PcaModel", "pca_fit", "pca_transform", "covariance"]


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (d, k), orthonormal columns
    eigenvalues: np.ndarray  # (k,), descending
    total_variance: float  # trace of the covariance

    @property
    def k(self):
        return self.components.shape[1]

    @property
    def explained_variance_ratio(self):
        if self.total_variance == 0:
            return np.zeros(self.k)
        return np.clip(self.eigenvalues, 0.0, None) / self.total_variance


def _dense(x):
    return x.toarray() if sp.issparse(x) else np.asarray(x, dtype=np.float64)


def covariance(x):
    """Sample covariance (n-1 denominator) and column means."""
    x = _dense(x)
    mean = x.mean(axis=0)
    xc = x - mean
    return xc.T @ xc / (x.shape[0] - 1), mean


def pca_fit(x, k, method="lapack"):
    """Keep the ``k`` leading eigenpairs of the sample covariance of ``x``."""
    n, d = x.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k={k} must lie in [1, min(n-1, d)] = [1, {min(n - 1, d)}]")
    cov, mean = covariance(x)
    vals, vecs = eigh_symmetric(cov, method=method)
    return PcaModel(mean, vecs[:, :k].copy(), vals[:k].copy(), float(np.trace(cov)))


def pca_transform(model, x):
    x = _dense(x)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValueError(f"expected {model.mean.shape[0]} columns, got shape {x.shape}")
    return (x - model.mean) @ model.components
