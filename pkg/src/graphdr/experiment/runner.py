"""Benchmark matrix: every (model, input mode, seed) cell trained and scored.

Cells are independent and may run in a process pool; everything written to
CSV is a pure function of the configuration, so repeated runs produce
byte-identical files. Wall-clock timings go to ``run.json`` only.
"""
from __future__ import annotations

import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..data import ingest_citation_files, load_container, make_split
from ..dimred import ae_encode, ae_train, pca_fit, pca_transform, tsne_embed, umap_embed
from ..metrics import classification_report, cluster_score
from ..models import ModelSpec, count_parameters, forward, prepare_graph
from ..trainer import train
from .report import CLASSIFICATION_FIELDS, CLUSTERING_FIELDS, write_rows, write_summary
from .svg import render_scatter_svg

log = logging.getLogger(__name__)

__all__ = ["CellResult", "RunReport", "load_dataset", "build_features", "embed", "run_matrix",
           "write_embedding_tsv", "read_embedding_tsv"]

EMBED_SOURCE = "logits"


@dataclass
class CellResult:
    model: str
    mode: str
    seed: int
    params: int
    classification: object = None
    epochs: int = 0
    best_epoch: int = 0
    clustering: dict = field(default_factory=dict)  # reducer -> ClusterScore
    embeddings: dict = field(default_factory=dict)  # reducer -> (n_test, 2)
    timing: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunReport:
    config: object
    cells: list
    feature_timing: dict = field(default_factory=dict)
    dataset_info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(c.error is None for c in self.cells)

    def classification_rows(self):
        rows = []
        for c in self.cells:
            if c.classification is None:
                continue
            rows.append({"model": c.model, "input": c.mode, "seed": c.seed, **c.classification.as_row(),
                         "params": c.params, "epochs": c.epochs, "best_epoch": c.best_epoch})
        return rows

    def clustering_rows(self):
        rows = []
        for c in self.cells:
            for reducer, score in c.clustering.items():
                rows.append({"model": c.model, "input": c.mode, "output": reducer, "seed": c.seed,
                             "labeling": score.labeling, "silhouette": score.silhouette, "dunn": score.dunn})
        return rows


def load_dataset(cfg):
    if cfg.cache:
        ds, split = load_container(cfg.cache)
        return ds, split
    ds = ingest_citation_files(cfg.content, cfg.cites, name=cfg.dataset)
    return ds, make_split(ds, cfg.per_class, cfg.n_val, cfg.n_test)


def build_features(ds, mode, seed, cfg, split):
    """Input features for one mode: raw, PCA-k of all nodes, or AE-k codes."""
    if mode == "Original":
        return ds.features
    if mode == "PCA-100":
        return pca_transform(pca_fit(ds.features, cfg.pca_dim), ds.features)
    if mode == "AE-100":
        ae = cfg.autoencoder
        model = ae_train(ds.features, ae.bottleneck, split, ae.train_config(seed), ae.activation,
                         scaling=ae.scaling)
        return ae_encode(model, ds.features)
    raise ValueError(f"unknown input mode {mode!r}")


def embed(points, reducer, cfg, seed):
    if reducer == "PCA":
        return pca_transform(pca_fit(points, 2), points)
    if reducer == "t-SNE":
        return tsne_embed(points, replace(cfg.tsne, seed=seed))
    if reducer == "UMAP":
        return umap_embed(points, replace(cfg.umap, seed=seed))
    raise ValueError(f"unknown reducer {reducer!r}")


def _run_cell(job):
    cfg, ds, split, features, kind, mode, seed, with_embeddings = job
    in_dim = features.shape[1]
    spec = ModelSpec(kind, in_dim, ds.num_classes, hidden_dim=cfg.hidden_dim)
    cell = CellResult(kind, mode, seed, count_parameters(spec))
    try:
        tcfg = cfg.train_config(kind, seed)
        t0 = time.perf_counter()
        params, history = train(spec, ds, split, tcfg, features=features)
        cell.timing["train"] = time.perf_counter() - t0
        cell.epochs, cell.best_epoch = history.epochs, history.best_epoch
        logits = forward(spec, params, prepare_graph(ds.edges, features), training=False)
        cell.classification = classification_report(logits, ds.labels, split.test)
        if with_embeddings:
            test_logits = logits[split.test]
            if cfg.labeling == "true-labels":
                labels = ds.labels[split.test]
            else:
                labels = np.argmax(test_logits, axis=1)
            for reducer in cfg.reducers:
                t0 = time.perf_counter()
                emb = embed(test_logits, reducer, cfg, seed)
                cell.timing[f"reduce:{reducer}"] = time.perf_counter() - t0
                cell.embeddings[reducer] = emb
                t0 = time.perf_counter()
                cell.clustering[reducer] = cluster_score(emb, labels, cfg.labeling)
                cell.timing[f"score:{reducer}"] = time.perf_counter() - t0
    except Exception as exc:  # recorded per cell; the run continues
        cell.error = f"{type(exc).__name__}: {exc}"
        log.error("cell %s/%s/seed %d failed:\n%s", kind, mode, seed, traceback.format_exc())
    return cell


def run_matrix(cfg, write=True):
    """Run every cell of ``cfg``; returns a :class:`RunReport` and writes outputs when ``write``."""
    ds, split = load_dataset(cfg)
    first_seed = cfg.seeds[0]
    features, feature_timing, jobs = {}, {}, []
    for mode in cfg.inputs:
        for seed in cfg.seeds:
            key = (mode, seed if mode == "AE-100" else None)
            if key not in features:
                t0 = time.perf_counter()
                try:
                    features[key] = build_features(ds, mode, seed, cfg, split)
                except Exception as exc:
                    features[key] = exc
                feature_timing[f"{mode}:{key[1]}"] = time.perf_counter() - t0
    slots = []
    for kind in cfg.models:
        for mode in cfg.inputs:
            for seed in cfg.seeds:
                feats = features[(mode, seed if mode == "AE-100" else None)]
                if isinstance(feats, Exception):
                    slots.append(CellResult(kind, mode, seed, 0, error=f"feature preparation failed: {feats}"))
                    continue
                slots.append(len(jobs))
                jobs.append((cfg, ds, split, feats, kind, mode, seed, seed == first_seed))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            done = list(pool.map(_run_cell, jobs))
    else:
        done = [_run_cell(job) for job in jobs]
    cells = [done[s] if isinstance(s, int) else s for s in slots]
    info = {"name": ds.name, "nodes": ds.n, "features": ds.num_features, "classes": list(ds.class_names),
            "undirected_edges": ds.num_edges, "dangling_citations": ds.dangling_edges,
            "split_sizes": split.sizes()}
    report = RunReport(cfg, cells, feature_timing, info)
    if write:
        write_outputs(report, ds, split)
    return report


def write_embedding_tsv(path, node_ids, embedding):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node_id\t" + "\t".join(f"dim{i + 1}" for i in range(embedding.shape[1])) + "\n")
        for pid, row in zip(node_ids, embedding):
            fh.write(pid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def read_embedding_tsv(path):
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        ids, rows = [], []
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return ids, np.array(rows, dtype=np.float64).reshape(len(ids), -1)


def write_outputs(report, ds, split):
    cfg = report.config
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    cls_rows = report.classification_rows()
    clu_rows = report.clustering_rows()
    test_ids = [ds.node_ids[i] for i in np.flatnonzero(split.test)]
    test_labels = ds.labels[split.test]
    for kind in cfg.models:
        for mode in cfg.inputs:
            stem = f"{kind}_{mode}"
            write_rows(out / f"{stem}_classification.csv", CLASSIFICATION_FIELDS,
                       [r for r in cls_rows if r["model"] == kind and r["input"] == mode])
            write_rows(out / f"{stem}_clustering.csv", CLUSTERING_FIELDS,
                       [r for r in clu_rows if r["model"] == kind and r["input"] == mode])
    for cell in report.cells:
        for reducer, emb in cell.embeddings.items():
            stem = f"{cell.model}_{cell.mode}_{reducer}"
            write_embedding_tsv(out / f"{stem}.tsv", test_ids, emb)
            svg = render_scatter_svg(emb, test_labels, ds.class_names,
                                     title=f"{ds.name}: {cell.model} / {cell.mode} / {reducer}")
            (out / f"{stem}.svg").write_text(svg, encoding="utf-8")
    if cls_rows:
        write_summary(out, cls_rows, clu_rows, dataset=ds.name)
    meta = {
        "config": _jsonable(asdict(cfg)),
        "dataset": report.dataset_info,
        "embedding_source": EMBED_SOURCE,
        "cluster_labeling": cfg.labeling,
        "feature_timing_s": report.feature_timing,
        "cells": [{"model": c.model, "input": c.mode, "seed": c.seed, "timing_s": c.timing, "error": c.error}
                  for c in report.cells],
        "ok": report.ok,
    }
    (out / "run.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj
