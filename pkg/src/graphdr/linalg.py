"""Sparse adjacency storage, symmetric eigensolvers and seeded generators.

Dense matrices throughout the package are plain ``numpy.ndarray`` objects of
dtype float64. Only the graph structure gets its own container.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseAdjacency",
    "eigh_symmetric",
    "jacobi_eigh",
    "make_rng",
]


@dataclass(frozen=True, eq=False)
class SparseAdjacency:
    """Square CSR matrix describing a weighted graph on ``n`` nodes.

    Column indices inside every row are strictly increasing. Use
    :meth:`from_edges` rather than the constructor unless the arrays are
    already canonical.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    _csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        data = np.asarray(self.data, dtype=np.float64)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("malformed row offsets")
        if len(data) != len(indices):
            raise ValueError("indices and data lengths differ")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(self.n), np.diff(indptr))
        same_row = rows[1:] == rows[:-1]
        if np.any(same_row & (indices[1:] <= indices[:-1])):
            raise ValueError("column indices must be strictly increasing within a row")
        for name, arr in (("indptr", indptr), ("indices", indices), ("data", data)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n, src, dst, weights=None, symmetric=False):
        """Build from COO triplets; duplicate (i, j) pairs keep a single entry.

        With ``symmetric=True`` every edge is mirrored before deduplication.
        Duplicates keep the weight of their first occurrence.
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(len(src))
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if not (len(src) == len(dst) == len(weights)):
            raise ValueError("src, dst and weights must have equal length")
        if symmetric:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            weights = np.concatenate([weights, weights])
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError(f"edge endpoint outside [0, {n})")
        key = src * n + dst
        _, first = np.unique(key, return_index=True)
        src, dst, weights = src[first], dst[first], weights[first]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return cls(n, np.cumsum(indptr), dst, weights)

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n + 1), np.arange(n), np.ones(n))

    @property
    def nnz(self):
        return len(self.indices)

    @cached_property
    def rows(self):
        """Row index of every stored entry (COO view)."""
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    @cached_property
    def csr(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def degrees(self):
        return np.diff(self.indptr)

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        out[self.rows, self.indices] = self.data
        return out

    def is_pattern_symmetric(self):
        pattern = sp.csr_matrix((np.ones(self.nnz), self.indices, self.indptr), shape=(self.n, self.n))
        return (pattern != pattern.T).nnz == 0

    def without_self_loops(self):
        keep = self.rows != self.indices
        return SparseAdjacency.from_edges(self.n, self.rows[keep], self.indices[keep], self.data[keep])

    def with_self_loops(self, value=1.0):
        """Return a copy where every diagonal entry is present and equal to ``value``."""
        base = self.without_self_loops()
        diag = np.arange(self.n)
        return SparseAdjacency.from_edges(
            self.n,
            np.concatenate([diag, base.rows]),
            np.concatenate([diag, base.indices]),
            np.concatenate([np.full(self.n, float(value)), base.data]),
        )

    def spmm(self, h):
        """Weighted neighbourhood sum: row i is sum_j a_ij * h_j."""
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] != self.n:
            raise ValueError(f"adjacency is {self.n}x{self.n} but features have shape {h.shape}")
        return np.asarray(self.csr @ h)

    def rmatmul_t(self, g):
        """A^T @ g, used for the backward pass of :meth:`spmm`."""
        return np.asarray(self.csr.T @ g)


def _check_symmetric(s, tol):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    scale = max(1.0, np.abs(s).max(initial=0.0))
    if not np.allclose(s, s.T, rtol=0.0, atol=tol * scale):
        raise ValueError("matrix is not symmetric")
    return s


def _canonical_signs(vecs):
    # Largest-magnitude component of each eigenvector is made positive.
    if vecs.size == 0:
        return vecs
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def jacobi_eigh(s, tol=1e-10, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Sweeps over all (p, q) pairs with p < q, annihilating each off-diagonal
    element by a plane rotation, until the off-diagonal Frobenius norm falls
    below ``tol * ||s||_F``. Quadratic cost per sweep in Python loops, so it
    is meant for small matrices.

    Returns eigenvalues sorted descending and the matching orthonormal
    eigenvectors as columns.
    """
    a = _check_symmetric(s, 1e-9).copy()
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    target = tol * np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s_ = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s_ * aq
                a[:, q] = s_ * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s_ * aq
                a[q, :] = s_ * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s_ * v[:, q]
                v[:, q] = s_ * vp + c * v[:, q]
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], _canonical_signs(v[:, order])


def eigh_symmetric(s, method="lapack"):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    ``method="lapack"`` delegates to :func:`numpy.linalg.eigh` and is what the
    reducers use on 1433- and 3703-dimensional covariances. ``"jacobi"`` runs
    :func:`jacobi_eigh`.

    Eigenvector signs are fixed so that the largest-magnitude entry of every
    column is positive, making the output deterministic.
    """
    if method == "jacobi":
        return jacobi_eigh(s)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    s = _check_symmetric(s, 1e-9)
    vals, vecs = np.linalg.eigh(0.5 * (s + s.T))
    order = np.argsort(-vals, kind="stable")
    return vals[order], _canonical_signs(vecs[:, order])


def make_rng(seed, *stream):
    """Counter-based (Philox) generator for ``seed`` and an optional stream path.

    Distinct ``stream`` tuples under one seed give independent streams, so a
    run can hand separate generators to dropout, initialisation and reducers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in stream))
    return np.random.Generator(np.random.Philox(ss))
