"""Classification scores over masked nodes and cluster-quality indices.

Percentages are on a 0-100 scale to match the benchmark tables.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .autodiff import value_of

__all__ = ["ClassificationReport", "ClusterScore", "classification_report", "confusion_matrix",
           "silhouette", "dunn_index", "cluster_score"]


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: tuple  # (class, support, precision, recall, f1) for every class present in the labels

    def as_row(self):
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class ClusterScore:
    silhouette: float
    dunn: float
    labeling: str = "true-labels"


def confusion_matrix(y_true, y_pred, num_classes):
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _ratio(a, b):
    return np.divide(a, b, out=np.zeros_like(a, dtype=np.float64), where=b > 0)


def classification_report(logits, labels, mask):
    """Accuracy and macro precision/recall/F1 of argmax predictions on ``mask``.

    Macro averages run over the classes that occur among the masked labels;
    a ratio with an empty denominator counts as 0.
    """
    logits = np.asarray(value_of(logits))
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no nodes")
    y = np.asarray(labels)[mask]
    pred = np.argmax(logits[mask], axis=1)
    k = max(logits.shape[1], int(y.max()) + 1)
    cm = confusion_matrix(y, pred, k)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    prec = _ratio(tp, predicted)
    rec = _ratio(tp, support)
    f1 = _ratio(2 * prec * rec, prec + rec)
    present = support > 0
    per_class = tuple(
        (int(c), int(support[c]), 100 * prec[c], 100 * rec[c], 100 * f1[c]) for c in np.flatnonzero(present)
    )
    return ClassificationReport(
        accuracy=100.0 * tp.sum() / len(y),
        precision=100.0 * prec[present].mean(),
        recall=100.0 * rec[present].mean(),
        f1=100.0 * f1[present].mean(),
        per_class=per_class,
    )


def _check_clusters(points, labels):
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if points.ndim != 2 or len(points) != len(labels):
        raise ValueError("points must be (n, k) with one label per row")
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise ValueError("need at least two clusters")
    return points, labels, clusters


def silhouette(points, labels):
    """Mean silhouette; singleton clusters score 0 and a = b = 0 scores 0."""
    points, labels, clusters = _check_clusters(points, labels)
    dist = cdist(points, points)
    member = labels[:, None] == clusters[None, :]
    sizes = member.sum(axis=0)
    sums = dist @ member
    own = np.argmax(member, axis=1)
    n = len(points)
    own_size = sizes[own]
    a = np.where(own_size > 1, sums[np.arange(n), own] / np.maximum(own_size - 1, 1), 0.0)
    mean_other = sums / sizes
    mean_other[np.arange(n), own] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.divide(b - a, denom, out=np.zeros(n), where=denom > 0)
    s[own_size == 1] = 0.0
    return float(s.mean())


def dunn_index(points, labels):
    """Smallest between-cluster point distance over the largest cluster diameter."""
    points, labels, _ = _check_clusters(points, labels)
    dist = cdist(points, points)
    same = labels[:, None] == labels[None, :]
    diameter = dist[same].max()
    if diameter == 0:
        raise ValueError("every cluster has zero diameter; Dunn index undefined")
    return float(dist[~same].min() / diameter)


def cluster_score(points, labels, labeling="true-labels"):
    return ClusterScore(silhouette(points, labels), dunn_index(points, labels), labeling)
