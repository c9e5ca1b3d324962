import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from graphdr.data import planted_partition_dataset, write_citation_files
from graphdr.experiment import aggregate, format_mean_std, load_config, render_scatter_svg, run_matrix
from graphdr.experiment.cli import main
from graphdr.experiment.report import markdown_table, mean_std
from graphdr.experiment.runner import read_embedding_tsv, write_embedding_tsv

SVG = "{http://www.w3.org/2000/svg}"

CONFIG = """\
[dataset]
name = toy
content = toy.content
cites = toy.cites
per_class = 10
n_val = 40
n_test = 80

[experiment]
models = gcn, mlp
inputs = Original, PCA-100
reducers = PCA, UMAP
seeds = 0, 1
pca_dim = 20
output = out

[train]
max_epochs = 40

[umap]
n_neighbors = 8
n_epochs = 30
"""


@pytest.fixture
def workspace(tmp_path):
    ds = planted_partition_dataset(n_per_class=60, num_classes=3, num_features=40, seed=2)
    write_citation_files(ds, tmp_path / "toy.content", tmp_path / "toy.cites")
    (tmp_path / "toy.ini").write_text(CONFIG)
    return tmp_path


def test_load_config_resolves_paths_and_sections(workspace):
    cfg = load_config(workspace / "toy.ini")
    assert cfg.content == str(workspace / "toy.content")
    assert cfg.models == ("gcn", "mlp") and cfg.seeds == (0, 1) and cfg.pca_dim == 20
    assert cfg.train_config("gcn", 1).max_epochs == 40 and cfg.train_config("gcn", 1).seed == 1
    assert cfg.umap.n_neighbors == 8 and cfg.tsne.perplexity == 40.0
    assert cfg.output_dir() == workspace / "out" / "toy"


@pytest.mark.parametrize("extra,match", [
    ("[train]\nlearning_rat = 1\n", "unknown option"),
    ("[experiment]\nmodels = gcn, sage\n", "unknown model"),
    ("[experiment]\ninputs = Raw\n", "unknown input"),
])
def test_config_errors(tmp_path, extra, match):
    (tmp_path / "c.ini").write_text("[dataset]\ncontent = a\ncites = b\n" + extra)
    with pytest.raises(ValueError, match=match):
        load_config(tmp_path / "c.ini")


def test_mean_std_formatting():
    assert format_mean_std([80.0, 82.0]) == "81.00 (1.41)"
    assert format_mean_std([80.0]) == "80.00 (—)"
    assert mean_std([1.0, 2.0, 3.0]) == (2.0, 1.0)


def test_aggregate_orders_and_checks_rows():
    rows = [{"model": m, "input": i, "seed": s, "accuracy": 80 + s, "precision": 1, "recall": 1, "f1": 1}
            for i in ("PCA-100", "Original") for m in ("mlp", "gcn") for s in (0, 1)]
    table = aggregate(rows)
    assert [(t["input"], t["model"]) for t in table] == [
        ("Original", "mlp"), ("Original", "gcn"), ("PCA-100", "mlp"), ("PCA-100", "gcn")]
    assert table[0]["accuracy"] == "80.50 (0.71)" and table[0]["seeds"] == 2
    with pytest.raises(ValueError, match="duplicate"):
        aggregate(rows + [rows[0]])
    with pytest.raises(ValueError, match="schema"):
        aggregate(rows + [{"model": "gcn"}])


def test_markdown_table_shape():
    lines = markdown_table(["a", "bb"], [[1, 2], [333, 4]]).splitlines()
    assert lines[0] == "| a   | bb |" and lines[1] == "|-----|----|" and len(lines) == 4


def test_svg_is_well_formed_with_one_circle_per_point():
    emb = np.random.default_rng(0).normal(size=(25, 2))
    labels = np.arange(25) % 3
    root = ET.fromstring(render_scatter_svg(emb, labels, ["a", "b<c", "d"], title="t & u").encode())
    circles = root.findall(f".//{SVG}circle")
    assert len(circles) == 25
    assert {c.get("fill") for c in circles} == {"#1f77b4", "#ff7f0e", "#2ca02c"}
    texts = [t.text for t in root.iter(f"{SVG}text")]
    assert "b<c" in texts and "t & u" in texts
    for c in circles:
        assert 0 <= float(c.get("cx")) <= 640 and 0 <= float(c.get("cy")) <= 480


def test_svg_rejects_bad_input():
    with pytest.raises(ValueError, match="2 columns"):
        render_scatter_svg(np.zeros((3, 3)), [0, 0, 0], ["a"])
    with pytest.raises(ValueError, match="palette"):
        render_scatter_svg(np.zeros((1, 2)), [0], list("abcdefgh"))


def test_embedding_tsv_roundtrip(tmp_path):
    emb = np.random.default_rng(0).normal(size=(4, 2))
    write_embedding_tsv(tmp_path / "e.tsv", ["a", "b", "c", "d"], emb)
    ids, back = read_embedding_tsv(tmp_path / "e.tsv")
    assert ids == ["a", "b", "c", "d"]
    np.testing.assert_array_equal(back, emb)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_matrix_outputs(workspace):
    cfg = load_config(workspace / "toy.ini")
    report = run_matrix(cfg)
    assert report.ok and len(report.cells) == 8
    out = cfg.output_dir()
    rows = read_csv(out / "gcn_Original_classification.csv")
    assert [r["seed"] for r in rows] == ["0", "1"]
    assert float(rows[0]["accuracy"]) > 80
    clu = read_csv(out / "gcn_Original_clustering.csv")
    assert [(r["output"], r["seed"]) for r in clu] == [("PCA", "0"), ("UMAP", "0")]
    for stem in ("gcn_Original_PCA", "mlp_PCA-100_UMAP"):
        ET.parse(out / f"{stem}.svg")
        ids, emb = read_embedding_tsv(out / f"{stem}.tsv")
        assert emb.shape == (80, 2)
    meta = json.loads((out / "run.json").read_text())
    assert meta["ok"] and meta["embedding_source"] == "logits" and len(meta["cells"]) == 8
    assert "Node classification" in (out / "summary.md").read_text()
    summary = read_csv(out / "classification_summary.csv")
    assert [s["model"] for s in summary] == ["mlp", "gcn", "mlp", "gcn"]


def test_cli_run_is_byte_reproducible(workspace, monkeypatch):
    monkeypatch.chdir(workspace)
    assert main(["run", "toy.ini", "--output", "a"]) == 0
    assert main(["run", "toy.ini", "--output", "b"]) == 0
    files = sorted(p.name for p in (workspace / "a" / "toy").iterdir() if p.suffix in (".csv", ".tsv"))
    assert len(files) > 10
    for name in files:
        assert (workspace / "a" / "toy" / name).read_bytes() == (workspace / "b" / "toy" / name).read_bytes()


def test_cli_reports_failed_cells(workspace, monkeypatch, capsys):
    monkeypatch.chdir(workspace)
    (workspace / "bad.ini").write_text(CONFIG.replace("reducers = PCA, UMAP", "reducers = t-SNE")
                                       + "\n[tsne]\nperplexity = 500\n")
    assert main(["run", "bad.ini", "--models", "mlp", "--inputs", "Original", "--seeds", "0"]) == 1
    assert "infeasible" in capsys.readouterr().err


def test_cli_ingest_plot_report_sweep(workspace, monkeypatch, capsys):
    monkeypatch.chdir(workspace)
    assert main(["ingest", "--content", "toy.content", "--cites", "toy.cites", "--out", "cache",
                 "--per-class", "10", "--n-val", "40", "--n-test", "80"]) == 0
    assert "split train/val/test = (30, 40, 80)" in capsys.readouterr().out
    assert main(["run", "toy.ini", "--models", "gcn", "--inputs", "Original", "--seeds", "0,1",
                 "--output", "r"]) == 0
    assert main(["plot", "r/toy/gcn_Original_UMAP.tsv", "--dataset", "cache", "--out", "p.svg"]) == 0
    assert len(ET.parse(workspace / "p.svg").getroot().findall(f".//{SVG}circle")) == 80
    (workspace / "r" / "toy" / "summary.md").unlink()
    assert main(["report", "r/toy"]) == 0
    assert (workspace / "r" / "toy" / "summary.md").exists()
    assert main(["sweep-bottleneck", "--cache", "cache", "--sizes", "4,8,16", "--max-epochs", "20",
                 "--out", "sweep.csv"]) == 0
    assert read_csv(workspace / "sweep.csv")[0]["size"] == "4"


def test_seed_offset_and_env_output(workspace, monkeypatch):
    monkeypatch.chdir(workspace)
    monkeypatch.setenv("GRAPHDR_RESULTS", str(workspace / "env"))
    (workspace / "noout.ini").write_text(CONFIG.replace("output = out\n", ""))
    assert main(["run", "noout.ini", "--models", "mlp", "--inputs", "Original", "--reducers", "",
                 "--seeds", "0", "--seed-offset", "5"]) == 0
    rows = read_csv(workspace / "env" / "toy" / "mlp_Original_classification.csv")
    assert [r["seed"] for r in rows] == ["5"]
