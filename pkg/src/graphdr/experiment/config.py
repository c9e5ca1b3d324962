"""INI experiment configuration.

Example::

    [dataset]
    name = cora
    content = data/cora/cora.content
    cites = data/cora/cora.cites
    ; or: cache = results/cora/dataset   (directory written by `graphdr ingest`)

    [experiment]
    models = mlp, gcn, gat, graphconv
    inputs = Original, PCA-100, AE-100
    reducers = PCA, t-SNE, UMAP
    seeds = 0, 1, 2, 3, 4
    output = results

    [train]
    weight_decay = 2e-3

    [train.graphconv]
    learning_rate = 1e-3

Sections ``[autoencoder]``, ``[tsne]`` and ``[umap]`` override the reducer
defaults field by field.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..dimred.tsne import TsneConfig
from ..dimred.umap import UmapConfig
from ..models import KINDS
from ..trainer import TrainConfig

__all__ = ["ExperimentConfig", "AeConfig", "load_config", "INPUT_MODES", "REDUCERS", "OUTPUT_ENV"]

INPUT_MODES = ("Original", "PCA-100", "AE-100")
REDUCERS = ("PCA", "t-SNE", "UMAP")
OUTPUT_ENV = "GRAPHDR_RESULTS"


@dataclass(frozen=True)
class AeConfig:
    bottleneck: int = 100
    activation: str = "relu"
    learning_rate: float = 1.0
    weight_decay: float = 0.0
    momentum: float = 0.9
    patience: int = 20
    max_epochs: int = 500
    scaling: str = "rms"

    def train_config(self, seed):
        return TrainConfig(learning_rate=self.learning_rate, weight_decay=self.weight_decay,
                           momentum=self.momentum, dropout=0.0, patience=self.patience,
                           max_epochs=self.max_epochs, seed=seed)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    content: str | None = None
    cites: str | None = None
    cache: str | None = None
    per_class: int = 20
    n_val: int = 500
    n_test: int = 1000
    models: tuple = KINDS
    inputs: tuple = INPUT_MODES
    reducers: tuple = REDUCERS
    seeds: tuple = (0, 1, 2, 3, 4)
    output: str = "results"
    workers: int = 1
    hidden_dim: int = 16
    pca_dim: int = 100
    labeling: str = "true-labels"
    train: dict = field(default_factory=dict)
    train_per_model: dict = field(default_factory=dict)
    autoencoder: AeConfig = AeConfig()
    tsne: TsneConfig = TsneConfig()
    umap: UmapConfig = UmapConfig()

    def __post_init__(self):
        if not self.models or not self.inputs or not self.seeds:
            raise ValueError("models, inputs and seeds must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        bad = [m for m in self.models if m not in KINDS]
        if bad:
            raise ValueError(f"unknown model kinds {bad}")
        bad = [m for m in self.inputs if m not in INPUT_MODES]
        if bad:
            raise ValueError(f"unknown input modes {bad}; choose from {INPUT_MODES}")
        bad = [r for r in self.reducers if r not in REDUCERS]
        if bad:
            raise ValueError(f"unknown reducers {bad}; choose from {REDUCERS}")
        if self.labeling not in ("true-labels", "predicted-labels"):
            raise ValueError("labeling must be true-labels or predicted-labels")
        if self.cache is None and (self.content is None or self.cites is None):
            raise ValueError("dataset needs either cache or both content and cites paths")

    def train_config(self, kind, seed):
        overrides = {**self.train, **self.train_per_model.get(kind, {})}
        return TrainConfig.for_kind(kind, seed=seed, **overrides)

    def output_dir(self):
        return Path(self.output) / self.dataset

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _split_list(text):
    return tuple(t.strip() for t in text.replace("\n", ",").split(",") if t.strip())


def _coerce(cls, section):
    types = {f.name: f.type for f in fields(cls)}
    out = {}
    for key, raw in section.items():
        if key not in types:
            raise ValueError(f"unknown option {key!r} for {cls.__name__}")
        default = getattr(cls(), key)
        out[key] = _parse_scalar(raw, default)
    return out


def _parse_scalar(raw, like):
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw.strip()


def load_config(path, base_dir=None):
    """Parse an INI file; relative dataset paths resolve against the file's directory."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    base = Path(base_dir) if base_dir else path.parent
    if "dataset" not in parser:
        raise ValueError(f"{path}: missing [dataset] section")
    ds = parser["dataset"]
    kw = {"dataset": ds.get("name", "dataset")}

    def resolve(p):
        return str(p) if Path(p).is_absolute() else str(base / p)

    for key in ("content", "cites", "cache"):
        if key in ds:
            kw[key] = resolve(ds[key])
    for key in ("per_class", "n_val", "n_test"):
        if key in ds:
            kw[key] = int(ds[key])
    if "experiment" in parser:
        ex = parser["experiment"]
        for key in ("models", "inputs", "reducers"):
            if key in ex:
                kw[key] = _split_list(ex[key])
        if "seeds" in ex:
            kw["seeds"] = tuple(int(s) for s in _split_list(ex["seeds"]))
        for key in ("workers", "hidden_dim", "pca_dim"):
            if key in ex:
                kw[key] = int(ex[key])
        if "labeling" in ex:
            kw["labeling"] = ex["labeling"].strip()
        if "output" in ex:
            kw["output"] = resolve(ex["output"])
    if OUTPUT_ENV in os.environ and "output" not in kw:
        kw["output"] = os.environ[OUTPUT_ENV]
    if "train" in parser:
        kw["train"] = _coerce(TrainConfig, parser["train"])
    per_model = {}
    for name in parser.sections():
        if name.startswith("train."):
            per_model[name.split(".", 1)[1]] = _coerce(TrainConfig, parser[name])
    kw["train_per_model"] = per_model
    if "autoencoder" in parser:
        kw["autoencoder"] = AeConfig(**_coerce(AeConfig, parser["autoencoder"]))
    if "tsne" in parser:
        kw["tsne"] = TsneConfig(**_coerce(TsneConfig, parser["tsne"]))
    if "umap" in parser:
        kw["umap"] = UmapConfig(**_coerce(UmapConfig, parser["umap"]))
    return ExperimentConfig(**kw)
