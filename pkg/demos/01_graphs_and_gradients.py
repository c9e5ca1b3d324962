"""Sparse graphs, GCN propagation weights and the gradient tape.

Run: python demos/01_graphs_and_gradients.py
"""
import numpy as np

from graphdr import autodiff as ad
from graphdr.data import normalize_adjacency
from graphdr.linalg import SparseAdjacency

# A five-node path 0-1-2-3-4 plus a chord 0-2. Edges are given once and
# mirrored, so the stored pattern is symmetric.
adj = SparseAdjacency.from_edges(5, [0, 1, 2, 3, 0], [1, 2, 3, 4, 2], symmetric=True)
print("degrees:", adj.degrees())
print("symmetric pattern:", adj.is_pattern_symmetric())

# The propagation matrix adds self-loops and rescales every entry by
# 1/sqrt((deg_i + 1)(deg_j + 1)).
anorm = normalize_adjacency(adj)
np.set_printoptions(precision=3, suppress=True)
print("normalised adjacency:\n", anorm.to_dense())

# Message passing is a sparse-dense product.
h = np.eye(5)[:, :2]
print("one propagation step of the first two indicator columns:\n", anorm.spmm(h))

# Gradients come from a tape. Parameters are registered on the tape, the
# loss is built from primitives, and backward() returns one gradient per
# parameter.
rng = np.random.default_rng(0)
x = rng.normal(size=(5, 3))
tape = ad.Tape()
w = tape.param(rng.normal(size=(3, 2)), "w")
out = ad.relu(ad.spmm(anorm, ad.matmul(x, w)))
loss = ad.mean_all(ad.mul(out, out))
grad = tape.backward(loss)[w]

# Check one coordinate against a central difference.
def value(wv):
    z = np.maximum(anorm.spmm(x @ wv), 0)
    return np.mean(z * z)

eps = 1e-6
bump = np.zeros((3, 2))
bump[1, 0] = eps
numeric = (value(w.value + bump) - value(w.value - bump)) / (2 * eps)
print(f"d loss / d w[1,0]: tape {grad[1, 0]:.8f}, finite difference {numeric:.8f}")
