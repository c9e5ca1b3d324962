"""The full benchmark: models x input modes x seeds, from files to tables.

This writes a small synthetic corpus in the .content/.cites text layout,
a config file, and runs the same driver as ``python -m graphdr run``.
Point the [dataset] section at the real Cora or Citeseer files to
reproduce the benchmark tables.

Run: python demos/05_benchmark_matrix.py
"""
import os
from pathlib import Path

from graphdr.data import planted_partition_dataset, write_citation_files
from graphdr.experiment import load_config, run_matrix

root = Path(os.environ.get("GRAPHDR_RESULTS", "demo_output")) / "matrix"
root.mkdir(parents=True, exist_ok=True)

ds = planted_partition_dataset(n_per_class=90, num_classes=4, num_features=200, p_in=0.04, p_out=0.003,
                               words_per_node=10, topic_strength=0.5, seed=4, name="toy")
write_citation_files(ds, root / "toy.content", root / "toy.cites")

(root / "toy.ini").write_text("""\
[dataset]
name = toy
content = toy.content
cites = toy.cites
per_class = 10
n_val = 80
n_test = 160

[experiment]
seeds = 0, 1, 2
pca_dim = 50
output = results

[autoencoder]
bottleneck = 50
max_epochs = 200

[tsne]
perplexity = 30
""")

cfg = load_config(root / "toy.ini")
report = run_matrix(cfg)
print(f"{len(report.cells)} cells, all ok: {report.ok}")
print((cfg.output_dir() / "summary.md").read_text())
print("per-cell CSVs, embeddings (.tsv) and plots (.svg) are in", cfg.output_dir())
