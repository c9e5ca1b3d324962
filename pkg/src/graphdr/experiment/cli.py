"""Command line entry point: ``python -m graphdr <command>``.

Commands: ``run``, ``ingest``, ``sweep-bottleneck``, ``plot``, ``report``.
The output root defaults to ``$GRAPHDR_RESULTS`` or ``results``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ..data import ingest_citation_files, load_container, make_split, save_container
from ..dimred.autoencoder import bottleneck_sweep, knee_size, write_sweep_csv
from .config import OUTPUT_ENV, AeConfig, load_config
from .report import read_rows, write_summary
from .runner import read_embedding_tsv, run_matrix
from .svg import render_scatter_svg


def _csv_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def cmd_run(args):
    cfg = load_config(args.config)
    seeds = tuple(int(s) for s in _csv_list(args.seeds)) if args.seeds else cfg.seeds
    seeds = tuple(s + args.seed_offset for s in seeds)
    cfg = cfg.with_overrides(
        seeds=seeds,
        models=_csv_list(args.models) if args.models else None,
        inputs=_csv_list(args.inputs) if args.inputs else None,
        reducers=_csv_list(args.reducers) if args.reducers is not None else None,
        workers=args.workers,
        output=args.output,
    )
    report = run_matrix(cfg)
    failed = [c for c in report.cells if c.error]
    for c in failed:
        print(f"FAILED {c.model}/{c.mode}/seed {c.seed}: {c.error}", file=sys.stderr)
    print(f"wrote {cfg.output_dir()} ({len(report.cells) - len(failed)}/{len(report.cells)} cells ok)")
    return 0 if report.ok else 1


def cmd_ingest(args):
    ds = ingest_citation_files(args.content, args.cites, name=args.name)
    split = make_split(ds, args.per_class, args.n_val, args.n_test)
    save_container(ds, split, args.out)
    print(f"{ds.name}: {ds.n} nodes, {ds.num_features} features, {ds.num_classes} classes, "
          f"{ds.num_edges} undirected edges, {ds.dangling_edges} dangling citations skipped")
    print(f"split train/val/test = {split.sizes()}; wrote {args.out}")
    return 0


def _dataset_from_args(args):
    if args.cache:
        return load_container(args.cache)
    ds = ingest_citation_files(args.content, args.cites)
    return ds, make_split(ds, args.per_class, args.n_val, args.n_test)


def cmd_sweep(args):
    ds, split = _dataset_from_args(args)
    ae = AeConfig(max_epochs=args.max_epochs)
    sizes = [int(s) for s in _csv_list(args.sizes)]
    sweep = bottleneck_sweep(ds.features, split, sizes, ae.train_config(args.seed), ae.activation,
                             scaling=ae.scaling)
    write_sweep_csv(sweep, args.out)
    for size, mse in sweep:
        print(f"{size}\t{mse:.6g}")
    knee = knee_size(sweep)
    if knee is not None:
        print(f"knee (largest second difference): {knee}")
    return 0


def cmd_plot(args):
    ds, _ = load_container(args.dataset)
    ids, emb = read_embedding_tsv(args.embedding)
    index = {pid: i for i, pid in enumerate(ds.node_ids)}
    missing = [pid for pid in ids if pid not in index]
    if missing:
        raise SystemExit(f"{len(missing)} embedded node ids are not in the dataset, e.g. {missing[0]!r}")
    labels = np.array([ds.labels[index[pid]] for pid in ids], dtype=np.int64)
    svg = render_scatter_svg(emb, labels, ds.class_names, title=args.title)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def cmd_report(args):
    root = Path(args.results)
    cls = read_rows(sorted(root.glob("*_classification.csv")))
    clu = read_rows(sorted(root.glob("*_clustering.csv")))
    if not cls:
        raise SystemExit(f"no *_classification.csv files under {root}")
    write_summary(root, cls, clu, dataset=args.name or root.name)
    print(f"wrote {root / 'summary.md'}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="graphdr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the benchmark matrix from a config file")
    r.add_argument("config")
    r.add_argument("--models")
    r.add_argument("--inputs")
    r.add_argument("--reducers", help="comma-separated; empty string disables embeddings")
    r.add_argument("--seeds")
    r.add_argument("--seed-offset", type=int, default=0)
    r.add_argument("--workers", type=int)
    r.add_argument("--output", default=os.environ.get(OUTPUT_ENV))
    r.set_defaults(func=cmd_run)

    def dataset_args(q, required):
        q.add_argument("--content", required=required)
        q.add_argument("--cites", required=required)
        q.add_argument("--per-class", type=int, default=20)
        q.add_argument("--n-val", type=int, default=500)
        q.add_argument("--n-test", type=int, default=1000)

    i = sub.add_parser("ingest", help="convert .content/.cites files to the cached TSV layout")
    dataset_args(i, True)
    i.add_argument("--name")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_ingest)

    s = sub.add_parser("sweep-bottleneck", help="validation MSE per autoencoder bottleneck size")
    dataset_args(s, False)
    s.add_argument("--cache")
    s.add_argument("--sizes", default="25,50,100,200,400")
    s.add_argument("--max-epochs", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="render an embedding TSV as an SVG scatter plot")
    pl.add_argument("embedding")
    pl.add_argument("--dataset", required=True, help="cached dataset directory (for labels)")
    pl.add_argument("--title")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    rp = sub.add_parser("report", help="aggregate per-cell CSVs into summary tables")
    rp.add_argument("results")
    rp.add_argument("--name")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep-bottleneck" and not args.cache and not (args.content and args.cites):
        raise SystemExit("sweep-bottleneck needs --cache or both --content and --cites")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
