"""Reverse-mode automatic differentiation over matrix-level primitives.

A :class:`Tape` records every primitive applied to a tracked value together
with a closure mapping the output cotangent to input cotangents. Primitives
accept plain arrays as well; if no argument is a :class:`Var` they simply
return the numeric result.

    tape = Tape()
    w = tape.param(np.ones((3, 2)), "w")
    loss = mean_all(relu(matmul(x, w)))
    grads = tape.backward(loss)      # {w: dloss/dw}
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .linalg import SparseAdjacency

__all__ = [
    "Tape", "Var", "value_of",
    "matmul", "spmm", "add", "sub", "mul", "scale",
    "relu", "elu", "leaky_relu", "softmax_rows", "log_softmax_rows",
    "dropout", "sum_all", "mean_all", "mse",
    "gather_rows", "scatter_add_rows", "segment_softmax", "slice_rows",
]


class Var:
    """A value living on a tape."""

    __slots__ = ("value", "tape", "tracked", "name", "grad")
    __array_priority__ = 100

    def __init__(self, value, tape, tracked=False, name=None):
        self.value = value
        self.tape = tape
        self.tracked = tracked
        self.name = name
        self.grad = None

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Var{label} shape={self.shape}{' tracked' if self.tracked else ''}>"


class Tape:
    """Ordered record of primitive applications for one computation.

    A tape belongs to one training run and must not be shared across threads.
    """

    def __init__(self):
        self._records = []
        self._params = []
        self._produced = set()

    def param(self, value, name=None):
        v = Var(np.array(value, dtype=np.float64), self, tracked=True, name=name)
        self._params.append(v)
        self._produced.add(id(v))
        return v

    @property
    def params(self):
        return list(self._params)

    def __len__(self):
        return len(self._records)

    def record(self, value, parents, backward):
        """Append one primitive application and return its output Var.

        ``backward(g)`` must return one cotangent (or None) per parent.
        """
        out = Var(value, self)
        self._records.append((out, tuple(parents), backward))
        self._produced.add(id(out))
        return out

    def backward(self, loss):
        """Propagate d(loss)/d(.) back to every tracked parameter.

        Returns a dict mapping each parameter Var to its gradient (zeros for
        parameters the loss does not depend on) and stores it on ``.grad``.
        The recorded operations are released afterwards, so a tape supports a
        single backward pass.
        """
        if not isinstance(loss, Var) or loss.tape is not self or id(loss) not in self._produced:
            raise ValueError("loss is not a value recorded on this tape")
        if np.size(loss.value) != 1:
            raise ValueError(f"loss must be scalar, got shape {loss.shape}")
        cot = {id(loss): np.ones_like(loss.value, dtype=np.float64)}
        for out, parents, fn in reversed(self._records):
            g = cot.pop(id(out), None)
            if g is None:
                continue
            for parent, pg in zip(parents, fn(g)):
                if pg is None or not isinstance(parent, Var):
                    continue
                key = id(parent)
                cot[key] = cot[key] + pg if key in cot else pg
        grads = {}
        for p in self._params:
            g = cot.get(id(p))
            p.grad = np.zeros_like(p.value) if g is None else np.asarray(g, dtype=np.float64).reshape(p.value.shape)
            grads[p] = p.grad
        # closures and Vars form reference cycles; drop them now rather than
        # waiting for the cycle collector, which ignores array sizes
        self._records.clear()
        self._produced.clear()
        return grads


def value_of(x):
    return x.value if isinstance(x, Var) else x


def _tape(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _unbroadcast(g, shape):
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def matmul(a, b):
    """Matrix product; ``a`` may also be a constant scipy sparse matrix."""
    av, bv = value_of(a), value_of(b)
    if av.shape[-1] != bv.shape[0]:
        raise ValueError(f"cannot multiply shapes {av.shape} and {bv.shape}")
    out = av @ bv
    if sp.issparse(out):
        out = out.toarray()
    out = np.asarray(out, dtype=np.float64)
    tape = _tape(a, b)
    if tape is None:
        return out

    def backward(g):
        ga = g @ bv.T if isinstance(a, Var) else None
        gb = np.asarray(av.T @ g) if isinstance(b, Var) else None
        return ga, gb

    return tape.record(out, (a, b), backward)


def spmm(adj: SparseAdjacency, h):
    """Neighbourhood aggregation ``adj @ h``; differentiable through ``h``."""
    out = adj.spmm(value_of(h))
    tape = _tape(h)
    if tape is None:
        return out
    return tape.record(out, (h,), lambda g: (adj.rmatmul_t(g),))


def add(a, b):
    av, bv = value_of(a), value_of(b)
    out = av + bv
    tape = _tape(a, b)
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    out = av - bv
    tape = _tape(a, b)
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(out, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b):
    """Elementwise product with numpy broadcasting (e.g. (m,1) * (m,k))."""
    av, bv = value_of(a), value_of(b)
    out = av * bv
    tape = _tape(a, b)
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(out, (a, b), lambda g: (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb)))


def scale(x, c):
    out = value_of(x) * c
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g * c,))


def relu(x):
    xv = value_of(x)
    out = np.maximum(xv, 0.0)
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g * (xv > 0),))


def leaky_relu(x, slope=0.2):
    xv = value_of(x)
    out = np.where(xv > 0, xv, slope * xv)
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (np.where(xv > 0, g, slope * g),))


def elu(x, alpha=1.0):
    xv = value_of(x)
    neg = alpha * np.expm1(np.minimum(xv, 0.0))
    out = np.where(xv > 0, xv, neg)
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (np.where(xv > 0, g, g * (neg + alpha)),))


def _log_softmax(v):
    shifted = v - v.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def log_softmax_rows(x):
    out = _log_softmax(value_of(x))
    tape = _tape(x)
    if tape is None:
        return out
    soft = np.exp(out)
    return tape.record(out, (x,), lambda g: (g - soft * g.sum(axis=1, keepdims=True),))


def softmax_rows(x):
    out = np.exp(_log_softmax(value_of(x)))
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (out * (g - (g * out).sum(axis=1, keepdims=True)),))


def dropout(x, rate, rng, training=True):
    """Inverted dropout: survivors are scaled by 1/(1-rate); identity at eval."""
    if not training or rate == 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    xv = value_of(x)
    mask = (rng.random(xv.shape) >= rate) / (1.0 - rate)
    out = xv * mask
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g * mask,))


def sum_all(x):
    xv = value_of(x)
    out = np.asarray(xv.sum())
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (np.full(xv.shape, float(g)),))


def mean_all(x):
    xv = value_of(x)
    out = np.asarray(xv.mean())
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (np.full(xv.shape, float(g) / xv.size),))


def mse(pred, target):
    """Mean squared error over all entries."""
    pv, tv = value_of(pred), value_of(target)
    if np.shape(pv) != np.shape(tv):
        raise ValueError(f"shape mismatch {np.shape(pv)} vs {np.shape(tv)}")
    diff = pv - tv
    out = np.asarray(np.mean(diff * diff))
    tape = _tape(pred, target)
    if tape is None:
        return out
    k = 2.0 / diff.size
    return tape.record(out, (pred, target), lambda g: (g * k * diff, -g * k * diff))


def gather_rows(x, idx):
    xv = value_of(x)
    idx = np.asarray(idx)
    out = xv[idx]
    tape = _tape(x)
    if tape is None:
        return out

    def backward(g):
        full = np.zeros_like(xv)
        np.add.at(full, idx, g)
        return (full,)

    return tape.record(out, (x,), backward)


def scatter_add_rows(x, idx, n):
    """Sum rows of ``x`` into ``n`` output rows according to ``idx``."""
    xv = value_of(x)
    idx = np.asarray(idx)
    out = np.zeros((n,) + xv.shape[1:])
    np.add.at(out, idx, xv)
    tape = _tape(x)
    if tape is None:
        return out
    return tape.record(out, (x,), lambda g: (g[idx],))


def segment_softmax(e, seg, n_segments):
    """Softmax of ``e`` (m x k) taken separately within each segment id."""
    ev = value_of(e)
    seg = np.asarray(seg)
    seg_max = np.full((n_segments,) + ev.shape[1:], -np.inf)
    np.maximum.at(seg_max, seg, ev)
    ex = np.exp(ev - seg_max[seg])
    denom = np.zeros((n_segments,) + ev.shape[1:])
    np.add.at(denom, seg, ex)
    out = ex / denom[seg]
    tape = _tape(e)
    if tape is None:
        return out

    def backward(g):
        dot = np.zeros((n_segments,) + ev.shape[1:])
        np.add.at(dot, seg, g * out)
        return (out * (g - dot[seg]),)

    return tape.record(out, (e,), backward)


def slice_rows(x, start, stop):
    xv = value_of(x)
    out = xv[start:stop]
    tape = _tape(x)
    if tape is None:
        return out

    def backward(g):
        full = np.zeros_like(xv)
        full[start:stop] = g
        return (full,)

    return tape.record(out, (x,), backward)
