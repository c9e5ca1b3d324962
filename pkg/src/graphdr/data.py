"""Citation-graph ingestion, deterministic splits and GCN propagation weights.

Text layout of the public Cora/Citeseer distributions::

    <name>.content   paper_id  w_1 ... w_d  class_label     (one paper per line)
    <name>.cites     cited_id  citing_id                     (one citation per line)

Cached containers are written as three TSV files:

``nodes.tsv``
    one ``#`` comment line
    ``# graphdr-nodes name=<name> num_features=<d> classes=<c1>,<c2>,...``,
    then a header ``index  node_id  label  features`` where ``features`` is a
    comma-separated list of the indices of nonzero word flags.
``edges.tsv``
    header ``src  dst``; one row per undirected edge with ``src < dst``
    (node indices, not paper ids).
``splits.tsv``
    header ``index  split`` with split one of ``train``, ``val``, ``test``,
    ``none``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .linalg import SparseAdjacency, make_rng

log = logging.getLogger(__name__)

__all__ = [
    "DatasetContainer",
    "SplitMask",
    "ingest_citation_files",
    "make_split",
    "normalize_adjacency",
    "save_container",
    "load_container",
    "planted_partition_dataset",
    "write_citation_files",
    "STANDARD_SPLITS",
]

# (per_class, n_val, n_test) used for the benchmark tables
STANDARD_SPLITS = {"cora": (20, 500, 1000), "citeseer": (20, 500, 1000)}


@dataclass(frozen=True, eq=False)
class DatasetContainer:
    name: str
    node_ids: tuple
    features: sp.csr_matrix
    labels: np.ndarray
    edges: SparseAdjacency
    class_names: tuple
    dangling_edges: int = 0

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def num_features(self):
        return self.features.shape[1]

    @property
    def num_classes(self):
        return len(self.class_names)

    @property
    def num_edges(self):
        """Undirected edge count."""
        return self.edges.nnz // 2

    def dense_features(self):
        return self.features.toarray()


@dataclass(frozen=True, eq=False)
class SplitMask:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        if np.any(self.train & self.val) or np.any(self.train & self.test) or np.any(self.val & self.test):
            raise ValueError("train/val/test masks overlap")

    def sizes(self):
        return int(self.train.sum()), int(self.val.sum()), int(self.test.sum())


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if parts:
                yield lineno, parts


def ingest_citation_files(content_path, cites_path, name=None, class_names=None):
    """Parse a ``.content``/``.cites`` pair into a :class:`DatasetContainer`.

    Node order follows the content file. Class indices follow the sorted
    class names unless ``class_names`` is given, in which case any other
    label is an error. Citations that mention an unknown paper id are
    skipped and counted in ``dangling_edges``; self-citations are dropped and
    the remaining edges are symmetrised and deduplicated.
    """
    content_path, cites_path = Path(content_path), Path(cites_path)
    name = name or content_path.stem
    ids, label_str, rows, cols = [], [], [], []
    index = {}
    d = None
    for lineno, parts in _read_lines(content_path):
        if len(parts) < 3:
            raise ValueError(f"{content_path}:{lineno}: expected id, word flags and a class label")
        pid, flags, label = parts[0], parts[1:-1], parts[-1]
        if d is None:
            d = len(flags)
        elif len(flags) != d:
            raise ValueError(f"{content_path}:{lineno}: {len(flags)} word flags, expected {d}")
        if pid in index:
            raise ValueError(f"{content_path}:{lineno}: duplicate node id {pid!r}")
        vec = np.array(flags, dtype=np.int8)
        if np.any((vec != 0) & (vec != 1)):
            raise ValueError(f"{content_path}:{lineno}: word flags must be 0 or 1")
        nz = np.flatnonzero(vec)
        index[pid] = len(ids)
        ids.append(pid)
        label_str.append(label)
        rows.append(np.full(len(nz), index[pid]))
        cols.append(nz)
    if not ids:
        raise ValueError(f"{content_path}: no nodes")
    n = len(ids)

    if class_names is None:
        class_names = sorted(set(label_str))
    class_names = tuple(class_names)
    lookup = {c: i for i, c in enumerate(class_names)}
    unknown = sorted(set(label_str) - lookup.keys())
    if unknown:
        raise ValueError(f"unknown class label(s): {unknown}")
    labels = np.array([lookup[c] for c in label_str], dtype=np.int64)

    r = np.concatenate(rows)
    c = np.concatenate(cols)
    features = sp.csr_matrix((np.ones(len(r)), (r, c)), shape=(n, d))
    features.sort_indices()

    src, dst = [], []
    dangling = 0
    for lineno, parts in _read_lines(cites_path):
        if len(parts) != 2:
            raise ValueError(f"{cites_path}:{lineno}: expected two paper ids")
        a, b = parts
        if a not in index or b not in index:
            dangling += 1
            continue
        if a != b:
            src.append(index[a])
            dst.append(index[b])
    if dangling:
        warnings.warn(f"{name}: skipped {dangling} citation(s) referencing unknown paper ids", stacklevel=2)
    edges = SparseAdjacency.from_edges(n, src, dst, symmetric=True)
    log.info("ingested %s: %d nodes, %d features, %d edges", name, n, d, edges.nnz // 2)
    return DatasetContainer(name, tuple(ids), features, labels, edges, class_names, dangling)


def make_split(ds, per_class=20, n_val=500, n_test=1000, rng=None):
    """Deterministic split in node order.

    train: the first ``per_class`` nodes of every class; val: the first
    ``n_val`` remaining nodes; test: the last ``n_test`` nodes not already
    taken. ``rng`` is accepted for interface symmetry and ignored.
    """
    n = ds.n
    if per_class * ds.num_classes + n_val + n_test > n:
        raise ValueError(
            f"split needs {per_class * ds.num_classes + n_val + n_test} nodes, dataset has {n}"
        )
    train = np.zeros(n, dtype=bool)
    for k in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == k)
        if len(members) < per_class:
            raise ValueError(f"class {ds.class_names[k]!r} has {len(members)} nodes, need {per_class}")
        train[members[:per_class]] = True
    val = np.zeros(n, dtype=bool)
    val[np.flatnonzero(~train)[:n_val]] = True
    test = np.zeros(n, dtype=bool)
    free = np.flatnonzero(~(train | val))
    if len(free) < n_test:
        raise ValueError("not enough nodes left for the test split")
    test[free[len(free) - n_test:]] = True
    return SplitMask(train, val, test)


def normalize_adjacency(edges):
    """Symmetric normalisation with self-loops: 1/sqrt((deg_i+1)(deg_j+1))."""
    if not edges.is_pattern_symmetric():
        raise ValueError("adjacency pattern must be symmetric")
    base = edges.without_self_loops()
    inv_sqrt = 1.0 / np.sqrt(base.degrees() + 1.0)
    looped = base.with_self_loops()
    values = inv_sqrt[looped.rows] * inv_sqrt[looped.indices]
    return SparseAdjacency(looped.n, looped.indptr, looped.indices, values)


def save_container(ds, split, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    feats = ds.features
    with open(directory / "nodes.tsv", "w", encoding="utf-8", newline="\n") as fh:
        if any(ch in c for c in ds.class_names for ch in " \t,="):
            raise ValueError("class names must not contain whitespace, ',' or '='")
        fh.write(f"# graphdr-nodes name={ds.name} num_features={ds.num_features} "
                 f"classes={','.join(ds.class_names)}\n")
        fh.write("index\tnode_id\tlabel\tfeatures\n")
        for i in range(ds.n):
            active = feats.indices[feats.indptr[i]:feats.indptr[i + 1]]
            fh.write(f"{i}\t{ds.node_ids[i]}\t{ds.class_names[ds.labels[i]]}\t{','.join(map(str, active))}\n")
    keep = ds.edges.rows < ds.edges.indices
    with open(directory / "edges.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("src\tdst\n")
        for a, b in zip(ds.edges.rows[keep], ds.edges.indices[keep]):
            fh.write(f"{a}\t{b}\n")
    with open(directory / "splits.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index\tsplit\n")
        for i in range(ds.n):
            tag = "train" if split.train[i] else "val" if split.val[i] else "test" if split.test[i] else "none"
            fh.write(f"{i}\t{tag}\n")


def load_container(directory):
    """Inverse of :func:`save_container`; returns ``(dataset, split)``."""
    directory = Path(directory)
    with open(directory / "nodes.tsv", encoding="utf-8") as fh:
        meta = dict(kv.split("=", 1) for kv in fh.readline().split()[2:])
        fh.readline()
        ids, names, rows, cols = [], [], [], []
        for i, line in enumerate(fh):
            idx, pid, label, active = line.rstrip("\n").split("\t")
            if int(idx) != i:
                raise ValueError(f"nodes.tsv: row {i} has index {idx}")
            ids.append(pid)
            names.append(label)
            if active:
                nz = [int(t) for t in active.split(",")]
                rows.extend([i] * len(nz))
                cols.extend(nz)
    n, d = len(ids), int(meta["num_features"])
    if "classes" in meta:
        class_names = tuple(meta["classes"].split(","))
    else:
        class_names = tuple(sorted(set(names)))
    lookup = {c: k for k, c in enumerate(class_names)}
    labels = np.array([lookup[c] for c in names], dtype=np.int64)
    features = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, d))
    edge_arr = np.loadtxt(directory / "edges.tsv", dtype=np.int64, skiprows=1, ndmin=2)
    edges = SparseAdjacency.from_edges(n, edge_arr[:, 0], edge_arr[:, 1], symmetric=True)
    tags = np.loadtxt(directory / "splits.tsv", dtype=str, skiprows=1, ndmin=2)[:, 1]
    split = SplitMask(tags == "train", tags == "val", tags == "test")
    return DatasetContainer(meta["name"], tuple(ids), features, labels, edges, class_names), split


def planted_partition_dataset(n_per_class=60, num_classes=3, num_features=50, p_in=0.08, p_out=0.005,
                              words_per_node=8, topic_strength=0.7, seed=0, name="synthetic"):
    """Small citation-like graph for tests and demos.

    Edges follow a planted-partition model. Every node draws
    ``words_per_node`` distinct words, a ``topic_strength`` fraction of them
    from its class's block of the vocabulary.
    """
    rng = make_rng(seed, 7)
    n = n_per_class * num_classes
    labels = np.repeat(np.arange(num_classes), n_per_class)
    labels = labels[rng.permutation(n)]
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    src, dst = np.nonzero(upper)
    edges = SparseAdjacency.from_edges(n, src, dst, symmetric=True)

    blocks = np.array_split(np.arange(num_features), num_classes)
    rows, cols = [], []
    for i in range(n):
        own = blocks[labels[i]]
        n_topic = min(len(own), int(round(topic_strength * words_per_node)))
        topic = rng.choice(own, size=n_topic, replace=False)
        rest = np.setdiff1d(np.arange(num_features), topic)
        noise = rng.choice(rest, size=words_per_node - n_topic, replace=False)
        words = np.union1d(topic, noise)
        rows.extend([i] * len(words))
        cols.extend(words.tolist())
    features = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, num_features))
    class_names = tuple(f"class_{k}" for k in range(num_classes))
    ids = tuple(f"p{i}" for i in range(n))
    return DatasetContainer(name, ids, features, labels, edges, class_names)


def write_citation_files(ds, content_path, cites_path):
    """Write ``ds`` in the ``.content``/``.cites`` text layout."""
    dense = ds.features.toarray().astype(int)
    with open(content_path, "w", encoding="utf-8", newline="\n") as fh:
        for i, pid in enumerate(ds.node_ids):
            fh.write("\t".join([pid, *map(str, dense[i]), ds.class_names[ds.labels[i]]]) + "\n")
    keep = ds.edges.rows < ds.edges.indices
    with open(cites_path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in zip(ds.edges.rows[keep], ds.edges.indices[keep]):
            fh.write(f"{ds.node_ids[a]}\t{ds.node_ids[b]}\n")
