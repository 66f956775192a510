import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from menuabc import gp


def test_matern_at_zero():
    assert gp.matern32([0.2], [0.2]) == pytest.approx(0.01, abs=1e-9)


def test_matern_at_lengthscale():
    val = gp.matern32([0.0], [0.1])
    assert val == pytest.approx(0.01 * (1 + math.sqrt(3)) * math.exp(-math.sqrt(3)), abs=1e-9)
    assert round(val, 6) == 0.004834


def test_matern_decays():
    assert gp.matern32([0.0], [10.0]) < 1e-60


def test_prior_model():
    m = gp.fit(np.zeros((0, 2)), [], dim=2)
    mean, var = gp.predict(m, [0.3, 0.7])
    assert (mean, var) == (0.0, 0.01)


def test_one_point_closed_form():
    y = 0.37
    m = gp.fit([[0.4]], [y], centre=False)
    assert gp.predict(m, [0.4])[0] == pytest.approx(y / 6, abs=1e-9)


def test_one_point_centred_returns_target():
    m = gp.fit([[0.4]], [0.37])
    assert gp.predict(m, [0.4])[0] == pytest.approx(0.37, abs=1e-12)


def _dense_oracle(X, y, Xs, cfg, centre):
    def k(a, b):
        r = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
        s = math.sqrt(3) * r / cfg.lengthscale
        return cfg.variance * (1 + s) * np.exp(-s)
    off = y.mean() if centre else 0.0
    Kinv = np.linalg.inv(k(X, X) + cfg.noise_variance * np.eye(len(X)))
    ks = k(Xs, X)
    mean = off + ks @ Kinv @ (y - off)
    var = cfg.variance - np.einsum("ij,jk,ik->i", ks, Kinv, ks)
    return mean, var


@pytest.mark.parametrize("centre", [True, False])
@pytest.mark.parametrize("seed", range(5))
def test_dense_inverse_oracle(seed, centre):
    rng = np.random.default_rng(seed)
    X, Xs = rng.random((20, 2)), rng.random((50, 2))
    y = rng.normal(0.3, 0.2, 20)
    cfg = gp.KernelConfig()
    mean, var = gp.predict(gp.fit(X, y, cfg, centre=centre), Xs)
    m_ref, v_ref = _dense_oracle(X, y, Xs, cfg, centre)
    np.testing.assert_allclose(mean, m_ref, atol=1e-8, rtol=0)
    np.testing.assert_allclose(var, v_ref, atol=1e-8, rtol=0)


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    X, y = rng.random((15, 2)), rng.random(15)
    p = rng.permutation(15)
    Xs = rng.random((30, 2))
    a = gp.predict(gp.fit(X, y), Xs)
    b = gp.predict(gp.fit(X[p], y[p]), Xs)
    np.testing.assert_allclose(a[0], b[0], atol=1e-10)
    np.testing.assert_allclose(a[1], b[1], atol=1e-10)


def test_duplicate_points():
    m = gp.fit([[0.5], [0.5], [0.5]], [1.0, 1.1, 0.9])
    mean, var = gp.predict(m, [0.5])
    assert np.isfinite(mean) and var >= 0


def test_reverts_to_prior_far_away():
    m = gp.fit([[0.0]], [0.5], centre=False)
    mean, var = gp.predict(m, [10.0])
    assert abs(mean) < 1e-12 and var == pytest.approx(0.01, abs=1e-12)


def test_interpolation_limit():
    cfg = gp.KernelConfig(noise_variance=1e-10)
    m = gp.fit([[0.2], [0.7]], [0.3, -0.4], cfg, centre=False)
    assert gp.predict(m, [0.2])[0] == pytest.approx(0.3, abs=1e-6)


def test_non_finite_targets_rejected():
    with pytest.raises(ValueError):
        gp.fit([[0.1]], [float("nan")])


def test_dimension_mismatch():
    m = gp.fit([[0.1, 0.2]], [1.0])
    with pytest.raises(ValueError):
        gp.predict(m, np.zeros((3, 3)))


def test_invalid_kernel():
    with pytest.raises(ValueError):
        gp.KernelConfig(lengthscale=0.0)


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    m = gp.fit(rng.random((8, 2)), rng.random(8))
    m.to_json(tmp_path / "m.json")
    import json
    back = gp.SurrogateModel.from_dict(json.loads((tmp_path / "m.json").read_text()))
    xs = rng.random((5, 2))
    np.testing.assert_allclose(gp.predict(back, xs)[0], gp.predict(m, xs)[0], atol=1e-14)


def test_factorization_on_random_designs():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n = int(rng.integers(1, 40))
        gp.fit(rng.random((n, 3)), rng.random(n))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_posterior_variance_below_prior(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((10, 2))
    m = gp.fit(X, rng.random(10))
    _, var = gp.predict(m, X)
    assert np.all(var <= 0.01 + 1e-15) and np.all(var >= 0)
