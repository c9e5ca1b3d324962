import numpy as np
import pytest

from graphdr import autodiff as ad
from graphdr.linalg import SparseAdjacency


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    src, dst = np.nonzero(upper)
    return SparseAdjacency.from_edges(n, src, dst, symmetric=True)


def finite_difference_check(build_loss, params, n_coords=120, eps=1e-5, seed=0):
    """Compare tape gradients with central differences on random coordinates.

    ``build_loss(values_or_vars)`` must build the scalar loss from a dict of
    parameters. Returns the largest relative error seen.
    """
    tape = ad.Tape()
    tracked = {k: tape.param(v, k) for k, v in params.items()}
    grads = tape.backward(build_loss(tracked))
    grads = {k: grads[v] for k, v in tracked.items()}

    names = list(params)
    sizes = [np.size(params[k]) for k in names]
    total = sum(sizes)
    assert total >= n_coords, f"only {total} coordinates available"
    rng = np.random.default_rng(seed)
    picks = rng.choice(total, size=n_coords, replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for flat in picks:
        j = np.searchsorted(offsets, flat, side="right") - 1
        name, local = names[j], flat - offsets[j]
        plus = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        minus = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        plus[name].flat[local] += eps
        minus[name].flat[local] -= eps
        numeric = (float(build_loss(plus)) - float(build_loss(minus))) / (2 * eps)
        analytic = grads[name].flat[local]
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-5)
        worst = max(worst, rel)
    return worst


@pytest.fixture
def small_graph():
    return random_graph(30, 0.15, seed=4)
