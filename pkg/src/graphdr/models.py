"""MLP, GCN, GAT and GraphConv node classifiers with one hidden layer.

Each model is ``layer1 -> activation -> dropout -> layer2`` returning raw
logits. Layers are plain functions over :mod:`graphdr.autodiff` primitives so
that the same code serves inference (arrays in, array out) and training
(tape variables in, tape variable out).

Parameter layout, in the order used for counting and serialisation:

=========  ==============================================================
kind       parameters per layer ``l`` in (1, 2)
=========  ==============================================================
mlp, gcn   ``w{l}`` (in, out), ``b{l}`` (out,)
gat        ``w{l}`` (in, out), ``att{l}`` (2*out,), ``b{l}`` (out,)
graphconv  ``w{l}_root`` (in, out), ``w{l}_neigh`` (in, out), ``b{l}`` (out,)
=========  ==============================================================
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .data import normalize_adjacency
from .linalg import SparseAdjacency

__all__ = [
    "KINDS",
    "ModelSpec",
    "GraphInputs",
    "prepare_graph",
    "param_shapes",
    "init_params",
    "count_parameters",
    "param_count",
    "mlp_layer",
    "gcn_layer",
    "gat_layer",
    "graphconv_layer",
    "forward",
    "save_params",
    "load_params",
]

KINDS = ("mlp", "gcn", "gat", "graphconv")
_MAGIC = b"GDRPARM1"


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    in_dim: int
    out_dim: int
    hidden_dim: int = 16
    dropout_rate: float = 0.1
    activation: str | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.activation is None:
            object.__setattr__(self, "activation", "elu" if kind == "gat" else "relu")
        if self.activation not in ("relu", "elu"):
            raise ValueError(f"unsupported activation {self.activation!r}")
        if min(self.in_dim, self.hidden_dim, self.out_dim) < 1:
            raise ValueError("layer widths must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


@dataclass(frozen=True, eq=False)
class GraphInputs:
    """Everything a forward pass needs besides parameters."""

    features: object  # ndarray or scipy CSR, n x in_dim
    adjacency: SparseAdjacency  # raw, no self-loops, unit weights
    normalized: SparseAdjacency  # GCN propagation matrix
    looped: SparseAdjacency  # raw + self-loops, GAT neighbourhoods

    @property
    def n(self):
        return self.adjacency.n


def prepare_graph(edges, features):
    """Bundle features with the three adjacency views used by the layers."""
    raw = edges.without_self_loops()
    raw = SparseAdjacency(raw.n, raw.indptr, raw.indices, np.ones(raw.nnz))
    if sp.issparse(features):
        features = sp.csr_matrix(features, dtype=np.float64)
    else:
        features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != raw.n:
        raise ValueError(f"{features.shape[0]} feature rows for {raw.n} nodes")
    return GraphInputs(features, raw, normalize_adjacency(raw), raw.with_self_loops())


def _layer_shapes(kind, fan_in, fan_out, l):
    if kind in ("mlp", "gcn"):
        return [(f"w{l}", (fan_in, fan_out)), (f"b{l}", (fan_out,))]
    if kind == "gat":
        return [(f"w{l}", (fan_in, fan_out)), (f"att{l}", (2 * fan_out,)), (f"b{l}", (fan_out,))]
    return [(f"w{l}_root", (fan_in, fan_out)), (f"w{l}_neigh", (fan_in, fan_out)), (f"b{l}", (fan_out,))]


def param_shapes(spec):
    return _layer_shapes(spec.kind, spec.in_dim, spec.hidden_dim, 1) + _layer_shapes(
        spec.kind, spec.hidden_dim, spec.out_dim, 2
    )


def count_parameters(spec):
    """Trainable scalar count, computed from the layer widths alone."""
    i, h, o = spec.in_dim, spec.hidden_dim, spec.out_dim
    base = i * h + h + h * o + o
    if spec.kind == "gat":
        return base + 2 * h + 2 * o
    if spec.kind == "graphconv":
        return 2 * (i * h) + h + 2 * (h * o) + o
    return base


def param_count(params):
    return int(sum(np.size(ad.value_of(p)) for p in params.values()))


def init_params(spec, rng):
    """Glorot-uniform weights and attention vectors, zero biases."""
    params = {}
    for name, shape in param_shapes(spec):
        if name.startswith("b"):
            params[name] = np.zeros(shape)
            continue
        fan_in, fan_out = (shape[0], 1) if len(shape) == 1 else shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return params


def _check_cols(x, w):
    xs, ws = np.shape(ad.value_of(x)), np.shape(ad.value_of(w))
    if xs[1] != ws[0]:
        raise ValueError(f"input has {xs[1]} columns but weight expects {ws[0]}")


def mlp_layer(x, w, b):
    _check_cols(x, w)
    return ad.add(ad.matmul(x, w), b)


def gcn_layer(x, anorm, w, b):
    if anorm.n != np.shape(ad.value_of(x))[0]:
        raise ValueError(f"adjacency has {anorm.n} nodes, input has {np.shape(ad.value_of(x))[0]} rows")
    _check_cols(x, w)
    return ad.add(ad.spmm(anorm, ad.matmul(x, w)), b)


def gat_layer(x, edges, w, att, b=None, slope=0.2, return_attention=False):
    """Single-head graph attention.

    Scores ``LeakyReLU(att . [W x_i || W x_j])`` are softmax-normalised over
    ``j`` in the neighbourhood of ``i`` including ``i`` itself. Self-loops are
    added here if ``edges`` lacks them.
    """
    n = np.shape(ad.value_of(x))[0]
    if edges.n != n:
        raise ValueError(f"adjacency has {edges.n} nodes, input has {n} rows")
    _check_cols(x, w)
    out_dim = np.shape(ad.value_of(w))[1]
    if np.shape(ad.value_of(att)) != (2 * out_dim,):
        raise ValueError(f"attention vector must have length {2 * out_dim}")
    if np.count_nonzero(edges.rows == edges.indices) != n:
        edges = edges.with_self_loops()
    z = ad.matmul(x, w)
    att_col = _as_column(att)
    s_self = ad.matmul(z, ad.slice_rows(att_col, 0, out_dim))
    s_neigh = ad.matmul(z, ad.slice_rows(att_col, out_dim, 2 * out_dim))
    rows, cols = edges.rows, edges.indices
    e = ad.leaky_relu(ad.add(ad.gather_rows(s_self, rows), ad.gather_rows(s_neigh, cols)), slope)
    alpha = ad.segment_softmax(e, rows, n)
    h = ad.scatter_add_rows(ad.mul(alpha, ad.gather_rows(z, cols)), rows, n)
    if b is not None:
        h = ad.add(h, b)
    if return_attention:
        return h, edges, np.ravel(ad.value_of(alpha))
    return h


def _as_column(v):
    val = ad.value_of(v)
    if not isinstance(v, ad.Var):
        return val.reshape(-1, 1)
    shape = val.shape
    return v.tape.record(val.reshape(-1, 1), (v,), lambda g: (g.reshape(shape),))


def graphconv_layer(x, edges, w1, w2, b):
    """Root transform plus transformed plain neighbour sum (unit edge weights)."""
    _check_cols(x, w1)
    _check_cols(x, w2)
    xv = ad.value_of(x)
    if sp.issparse(xv):
        agg = edges.csr @ xv
    else:
        agg = ad.spmm(edges, x)
    return ad.add(ad.add(ad.matmul(x, w1), ad.matmul(agg, w2)), b)


def _layer(spec, graph, x, params, l):
    p = params
    if spec.kind == "mlp":
        return mlp_layer(x, p[f"w{l}"], p[f"b{l}"])
    if spec.kind == "gcn":
        return gcn_layer(x, graph.normalized, p[f"w{l}"], p[f"b{l}"])
    if spec.kind == "gat":
        return gat_layer(x, graph.looped, p[f"w{l}"], p[f"att{l}"], p[f"b{l}"])
    return graphconv_layer(x, graph.adjacency, p[f"w{l}_root"], p[f"w{l}_neigh"], p[f"b{l}"])


def forward(spec, params, graph, training=False, rng=None):
    """Raw logits (n x out_dim). Deterministic when ``training`` is false."""
    expected = dict(param_shapes(spec))
    if set(params) != set(expected):
        raise ValueError(f"parameters {sorted(params)} do not match {spec.kind} layout {sorted(expected)}")
    for name, shape in expected.items():
        if np.shape(ad.value_of(params[name])) != shape:
            raise ValueError(f"parameter {name} has shape {np.shape(ad.value_of(params[name]))}, expected {shape}")
    if training and spec.dropout_rate > 0 and rng is None:
        raise ValueError("training-mode dropout needs an rng")
    h = _layer(spec, graph, graph.features, params, 1)
    h = ad.relu(h) if spec.activation == "relu" else ad.elu(h)
    h = ad.dropout(h, spec.dropout_rate, rng, training)
    return _layer(spec, graph, h, params, 2)


def save_params(path, spec, params):
    """Checkpoint: magic, uint32 length + JSON spec, then float64 LE arrays in layout order."""
    header = json.dumps(asdict(spec), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for name, shape in param_shapes(spec):
            arr = np.asarray(ad.value_of(params[name]), dtype="<f8")
            if arr.shape != shape:
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected {shape}")
            fh.write(arr.tobytes(order="C"))


def load_params(path):
    blob = Path(path).read_bytes()
    if blob[:8] != _MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint")
    (hlen,) = struct.unpack("<I", blob[8:12])
    spec = ModelSpec(**json.loads(blob[12:12 + hlen]))
    offset = 12 + hlen
    params = {}
    for name, shape in param_shapes(spec):
        size = int(np.prod(shape))
        params[name] = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * size
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes")
    return spec, params
