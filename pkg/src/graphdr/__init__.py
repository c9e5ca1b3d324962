"""Semi-supervised node classification on citation graphs with a priori and
a posteriori dimensionality reduction.

Modules
-------
linalg      sparse adjacency, symmetric eigensolvers, seeded generators
autodiff    reverse-mode tape over matrix primitives
data        .content/.cites ingestion, splits, normalised adjacency
models      MLP / GCN / GAT / GraphConv layers and parameter accounting
trainer     masked cross-entropy, SGD with momentum, early stopping
dimred      PCA, t-SNE, UMAP, autoencoder
metrics     accuracy / precision / recall / F1, silhouette, Dunn index
experiment  benchmark matrix, tables, SVG plots, command line
"""
__version__ = "0.1.0"
