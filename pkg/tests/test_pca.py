import numpy as np
import pytest
import scipy.sparse as sp
from scipy.spatial.distance import pdist

from graphdr.dimred import pca_fit, pca_transform
from graphdr.dimred.pca import covariance


@pytest.fixture
def x():
    rng = np.random.default_rng(0)
    return rng.normal(size=(80, 12)) @ rng.normal(size=(12, 12)) + 3.0


def test_total_variance_is_covariance_trace(x):
    model = pca_fit(x, 4)
    assert abs(model.total_variance - np.trace(np.cov(x, rowvar=False))) < 1e-9
    full = pca_fit(x, 12)
    assert abs(full.eigenvalues.sum() - model.total_variance) < 1e-9
    np.testing.assert_allclose(full.explained_variance_ratio.sum(), 1.0, atol=1e-12)


def test_full_rank_projection_is_isometry(x):
    y = pca_transform(pca_fit(x, 12), x)
    np.testing.assert_allclose(pdist(y), pdist(x), rtol=0, atol=1e-9)


def test_components_orthonormal_and_sorted(x):
    m = pca_fit(x, 5)
    np.testing.assert_allclose(m.components.T @ m.components, np.eye(5), atol=1e-12)
    assert np.all(np.diff(m.eigenvalues) <= 0)
    y = pca_transform(m, x)
    np.testing.assert_allclose(y.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(np.var(y, axis=0, ddof=1), m.eigenvalues, rtol=1e-10)


def test_jacobi_and_lapack_fits_agree(x):
    a, b = pca_fit(x, 3), pca_fit(x, 3, method="jacobi")
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10)
    np.testing.assert_allclose(pca_transform(a, x), pca_transform(b, x), atol=1e-7)


def test_sparse_input_matches_dense():
    rng = np.random.default_rng(1)
    dense = (rng.random((50, 30)) < 0.1).astype(float)
    np.testing.assert_allclose(covariance(sp.csr_matrix(dense))[0], np.cov(dense, rowvar=False), atol=1e-14)
    m = pca_fit(sp.csr_matrix(dense), 5)
    np.testing.assert_allclose(pca_transform(m, sp.csr_matrix(dense)), pca_transform(m, dense), atol=1e-14)


def test_invalid_k(x):
    with pytest.raises(ValueError):
        pca_fit(x, 0)
    with pytest.raises(ValueError):
        pca_fit(x, 13)
    with pytest.raises(ValueError, match="columns"):
        pca_transform(pca_fit(x, 2), x[:, :5])
