"""Dimensionality reducers applied before (PCA, autoencoder) or after (PCA, t-SNE, UMAP) training."""
from .autoencoder import AeModel, ae_decode, ae_encode, ae_train, bottleneck_sweep, knee_size
from .pca import PcaModel, pca_fit, pca_transform
from .tsne import TsneConfig, TsneResult, tsne, tsne_embed
from .umap import UmapConfig, umap_embed

__all__ = [
    "AeModel", "ae_decode", "ae_encode", "ae_train", "bottleneck_sweep", "knee_size",
    "PcaModel", "pca_fit", "pca_transform",
    "TsneConfig", "TsneResult", "tsne", "tsne_embed",
    "UmapConfig", "umap_embed",
]
