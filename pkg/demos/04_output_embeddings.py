"""Looking at what a trained model learned: 2-D embeddings of its outputs.

The test-node logits of a trained GCN are embedded with PCA, t-SNE and UMAP,
scored with the silhouette coefficient and the Dunn index against the true
labels, and drawn as SVG scatter plots.

Run: python demos/04_output_embeddings.py
"""
import os
from pathlib import Path

import numpy as np

from graphdr.data import make_split, planted_partition_dataset
from graphdr.dimred import pca_fit, pca_transform, tsne_embed, umap_embed
from graphdr.dimred.tsne import TsneConfig
from graphdr.dimred.umap import UmapConfig
from graphdr.experiment import render_scatter_svg
from graphdr.metrics import cluster_score
from graphdr.models import ModelSpec, forward, prepare_graph
from graphdr.trainer import TrainConfig, train

out = Path(os.environ.get("GRAPHDR_RESULTS", "demo_output")) / "embeddings"
out.mkdir(parents=True, exist_ok=True)

ds = planted_partition_dataset(n_per_class=100, num_classes=6, num_features=240, p_in=0.04, p_out=0.003,
                               words_per_node=10, topic_strength=0.5, seed=3)
split = make_split(ds, per_class=10, n_val=100, n_test=300)
spec = ModelSpec("gcn", ds.num_features, ds.num_classes)
params, _ = train(spec, ds, split, TrainConfig(seed=0))
logits = forward(spec, params, prepare_graph(ds.edges, ds.features))[split.test]
labels = ds.labels[split.test]

embeddings = {
    "PCA": pca_transform(pca_fit(logits, 2), logits),
    "t-SNE": tsne_embed(logits, TsneConfig(perplexity=30)),
    "UMAP": umap_embed(logits, UmapConfig(n_neighbors=15)),
}
for name, emb in embeddings.items():
    score = cluster_score(emb, labels)
    path = out / f"gcn_{name}.svg"
    path.write_text(render_scatter_svg(emb, labels, ds.class_names, title=f"GCN logits, {name}"))
    print(f"{name:<6} silhouette {score.silhouette:6.3f}   Dunn {score.dunn:6.3f}   -> {path}")

# PCA is linear, so classes that the logits separate along many directions
# overlap in two dimensions. The neighbourhood-based methods pull each
# class into its own island, which the silhouette picks up.
print("spread of the UMAP layout:", np.ptp(embeddings["UMAP"], axis=0).round(1))
