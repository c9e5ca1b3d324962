import numpy as np
import pytest
import scipy.sparse as sp

from graphdr import autodiff as ad
from graphdr.data import SplitMask
from graphdr.dimred import ae_decode, ae_encode, ae_train
from graphdr.dimred.autoencoder import bottleneck_sweep, column_rms, knee_size, write_sweep_csv
from graphdr.trainer import TrainConfig

from conftest import finite_difference_check


def low_rank(n=300, d=120, k=20, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, k)) @ rng.normal(size=(k, d)) / np.sqrt(k)
    val = np.zeros(n, bool)
    val[-60:] = True
    return x, SplitMask(~val, val, np.zeros(n, bool))


@pytest.mark.parametrize("activation", ["relu", "linear"])
def test_subspace_recovery(activation):
    x, split = low_rank()
    cfg = TrainConfig(learning_rate=1.0, weight_decay=0.0, momentum=0.9, dropout=0.0, patience=20,
                      max_epochs=2000, seed=0)
    model = ae_train(x, 40 if activation == "relu" else 20, split, cfg, activation)
    recon = ae_decode(model, ae_encode(model, x))
    assert np.mean((recon - x) ** 2) < 1e-3


def test_reconstruction_gradient():
    x, _ = low_rank(n=15, d=10, k=3)
    rng = np.random.default_rng(1)
    params = {"w_enc": rng.normal(size=(10, 6)), "b_enc": rng.normal(size=6),
              "w_dec": rng.normal(size=(6, 10)), "b_dec": rng.normal(size=10)}

    def loss(p):
        z = ad.relu(ad.add(ad.matmul(x, p["w_enc"]), p["b_enc"]))
        return ad.mse(ad.add(ad.matmul(z, p["w_dec"]), p["b_dec"]), x)

    assert finite_difference_check(loss, params, n_coords=100) < 1e-4


def test_sparse_and_dense_inputs_agree():
    rng = np.random.default_rng(2)
    dense = (rng.random((80, 30)) < 0.15).astype(float)
    split = SplitMask(np.arange(80) < 60, np.arange(80) >= 60, np.zeros(80, bool))
    cfg = TrainConfig(learning_rate=0.5, weight_decay=0.0, dropout=0.0, max_epochs=15)
    a = ae_train(dense, 5, split, cfg)
    b = ae_train(sp.csr_matrix(dense), 5, split, cfg)
    np.testing.assert_allclose(ae_encode(a, dense), ae_encode(b, sp.csr_matrix(dense)), atol=1e-12)


def test_knee_is_largest_second_difference():
    sweep = [(200, 0.25), (25, 1.0), (100, 0.3), (50, 0.5)]
    assert knee_size(sweep) == 50
    assert knee_size(sweep[:2]) is None


def test_sweep_is_monotone_on_low_rank_data(tmp_path):
    x, split = low_rank(n=200, d=60, k=10)
    cfg = TrainConfig(learning_rate=0.3, weight_decay=0.0, dropout=0.0, patience=10, max_epochs=400)
    sweep = bottleneck_sweep(x, split, [2, 5, 10, 20], cfg, activation="linear")
    mse = [m for _, m in sweep]
    assert mse[0] > mse[1] > mse[2]
    write_sweep_csv(sweep, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("size,val_mse\n2,")


def test_invalid_arguments():
    x, split = low_rank(n=70, d=10, k=2)
    with pytest.raises(ValueError):
        ae_train(x, 11, split)
    with pytest.raises(ValueError):
        ae_train(x, 3, split, activation="tanh")
    with pytest.raises(ValueError):
        ae_train(x, 3, split, scaling="zscore")


def test_column_rms_matches_dense_formula():
    rng = np.random.default_rng(3)
    dense = (rng.random((50, 12)) < 0.2) * rng.integers(1, 4, (50, 12)).astype(float)
    dense[:, 5] = 0.0
    expected = np.sqrt((dense ** 2).mean(axis=0))
    expected[5] = 1.0
    np.testing.assert_allclose(column_rms(dense), expected, rtol=1e-15)
    np.testing.assert_allclose(column_rms(sp.csr_matrix(dense)), expected, rtol=1e-15)


def test_scaling_is_stored_and_undone_by_decode():
    x, split = low_rank(n=120, d=30, k=4)
    x = x * np.linspace(0.1, 10.0, 30)
    cfg = TrainConfig(learning_rate=0.5, weight_decay=0.0, dropout=0.0, max_epochs=3)
    model = ae_train(x, 5, split, cfg)
    np.testing.assert_allclose(model.scale, column_rms(x), rtol=1e-15)
    p = model.params()
    z = np.maximum(x / model.scale @ p["w_enc"] + p["b_enc"], 0.0)
    np.testing.assert_allclose(ae_encode(model, x), z, atol=1e-12)
    np.testing.assert_allclose(ae_decode(model, z), (z @ p["w_dec"] + p["b_dec"]) * model.scale, atol=1e-12)
    assert ae_train(x, 5, split, cfg, scaling="none").scale is None


def test_identity_initialised_full_width_linear_ae_is_exact():
    x, split = low_rank(n=80, d=12, k=3)
    init = {"w_enc": np.eye(12), "b_enc": np.zeros(12), "w_dec": np.eye(12), "b_dec": np.zeros(12)}
    cfg = TrainConfig(learning_rate=0.1, weight_decay=0.0, dropout=0.0, max_epochs=1)
    model = ae_train(x, 12, split, cfg, activation="linear", init=init)
    assert model.history.train_loss[0] == pytest.approx(0.0, abs=1e-28)
    np.testing.assert_allclose(ae_decode(model, ae_encode(model, x)), x, atol=1e-12)


def test_training_loss_descends_without_momentum():
    x, split = low_rank(n=100, d=20, k=4)
    cfg = TrainConfig(learning_rate=0.05, weight_decay=0.0, momentum=0.0, dropout=0.0, patience=1000,
                      max_epochs=200)
    losses = np.array(ae_train(x, 6, split, cfg).history.train_loss)
    assert np.all(np.diff(losses) <= 1e-6)
    assert losses[-1] < losses[0]


def test_full_width_linear_sweep_reaches_zero():
    _, split = low_rank(n=150)
    x = np.random.default_rng(5).normal(size=(150, 15))
    cfg = TrainConfig(learning_rate=0.3, weight_decay=0.0, dropout=0.0, patience=50, max_epochs=3000)
    [(size, mse)] = bottleneck_sweep(x, split, [15], cfg, activation="linear")
    assert size == 15 and mse < 1e-4
