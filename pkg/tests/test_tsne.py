import numpy as np
import pytest
from scipy.optimize import brentq

from graphdr.dimred.tsne import (TsneConfig, conditional_probabilities, joint_probabilities, kl_divergence,
                                 student_t_affinities, tsne)
from graphdr.metrics import silhouette


def blobs(n_per=40, k=3, d=6, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(k), n_per)
    return rng.normal(size=(len(labels), d)) + 8 * np.eye(k, d)[labels], labels


def row_perplexity(d2_row, beta):
    w = np.exp(-(d2_row - d2_row.min()) * beta)
    p = w / w.sum()
    nz = p > 0
    return np.exp(-np.sum(p[nz] * np.log(p[nz])))


def test_perplexity_calibration_vs_root_finder():
    x, _ = blobs(20)
    d2 = np.sum((x[:, None] - x[None]) ** 2, axis=-1)
    cond, perp = conditional_probabilities(d2, 10.0, tol=1e-6, max_iter=200)
    np.testing.assert_allclose(perp, 10.0, atol=1e-6)
    for i in (0, 17, 45):
        row = np.delete(d2[i], i)
        beta = brentq(lambda b: row_perplexity(row, b) - 10.0, 1e-8, 1e3)
        w = np.exp(-(row - row.min()) * beta)
        np.testing.assert_allclose(np.delete(cond[i], i), w / w.sum(), atol=1e-6)


def test_joint_probabilities_normalised_and_symmetric():
    x, _ = blobs()
    p, _ = joint_probabilities(x, 15.0)
    assert abs(p.sum() - 1.0) < 1e-9
    np.testing.assert_allclose(p, p.T, atol=1e-15)
    assert np.all(np.diag(p) == 0)
    with pytest.raises(ValueError, match="infeasible"):
        joint_probabilities(x[:10], 9.0)


def test_student_t_affinities_normalised():
    y = np.random.default_rng(3).normal(size=(30, 2))
    q, num = student_t_affinities(y)
    assert abs(q.sum() - 1.0) < 1e-9
    assert np.all(np.diag(q) == 0)
    np.testing.assert_allclose(num[0, 1], 1 / (1 + np.sum((y[0] - y[1]) ** 2)), rtol=1e-12)


def test_kl_zero_for_identical_distributions():
    p = np.random.default_rng(0).random((5, 5))
    p /= p.sum()
    assert abs(kl_divergence(p, p)) < 1e-15


def test_optimisation_lowers_kl_and_separates_clusters():
    x, labels = blobs()
    res = tsne(x, TsneConfig(perplexity=20, n_iter=500))
    assert res.kl_final <= res.kl_initial
    assert res.perplexity_error < 1e-4
    assert res.kl_trace[0] == (0, res.kl_initial) and res.kl_trace[-1] == (500, res.kl_final)
    assert silhouette(res.embedding, labels) > 0.7
    np.testing.assert_allclose(res.embedding.mean(axis=0), 0, atol=1e-9)


def test_seeded_runs_are_identical():
    x, _ = blobs(15)
    cfg = TsneConfig(perplexity=8, n_iter=100, seed=4)
    np.testing.assert_array_equal(tsne(x, cfg).embedding, tsne(x, cfg).embedding)


def test_affinities_ignore_translation():
    x, _ = blobs()
    p, _ = joint_probabilities(x, 15.0)
    shifted, _ = joint_probabilities(x + np.array([3.0, -1.5, 0.25, 7.0, -2.0, 0.5]), 15.0)
    np.testing.assert_allclose(shifted, p, atol=1e-12, rtol=0)
