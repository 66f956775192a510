import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from menuabc import gp
from menuabc.inference import (
    EngineConfig, InferenceError, InferenceProblem, PosteriorApprox, evaluate,
    extract_posterior, map_estimate, rejection_abc, run_inference, sample_seed,
)
from menuabc.params import ParameterSpace, PriorSpec
from menuabc.toy import gaussian_toy, squared_error

UNIT = ParameterSpace.from_priors({"x": PriorSpec.uniform(0, 1)})


def conjugate_mean(ybar, n, lo=-3.0, hi=3.0):
    """Posterior mean for a N(0, 1) prior truncated to [lo, hi] and n unit-variance draws."""
    var = 1.0 / (1.0 + n)
    m, s = n * ybar * var, math.sqrt(var)
    return stats.truncnorm((lo - m) / s, (hi - m) / s, loc=m, scale=s).mean()


class Quadratic:
    """Deterministic discrepancy ``(x - 0.3)**2`` returned as the summary."""

    def __init__(self):
        self.calls = 0

    def __call__(self, theta, seed):
        self.calls += 1
        return (float(theta[0]) - 0.3) ** 2


def identity(observed, simulated):
    return simulated


def quadratic_problem():
    return InferenceProblem(UNIT, Quadratic(), None, identity)


def test_budget_of_only_initial_points():
    res = run_inference(quadratic_problem(), EngineConfig(n_init=6, n_acquisitions=0))
    assert [s.origin for s in res.samples] == ["sobol"] * 6


def test_quadratic_map():
    res = run_inference(quadratic_problem(), EngineConfig(n_init=8, n_acquisitions=32))
    assert abs(res.map[0] - 0.3) <= 0.05


def test_budget_never_exceeded():
    for workers in (1, 3):
        prob = quadratic_problem()
        run_inference(prob, EngineConfig(n_init=5, n_acquisitions=12, workers=workers))
        assert prob.simulator.calls == 17


def _trace(res):
    return [(s.index, s.origin, s.seed, tuple(s.unit_point), s.discrepancy) for s in res.samples]


def test_serialized_runs_identical():
    cfg = EngineConfig(n_init=5, n_acquisitions=15, seed=11)
    assert _trace(run_inference(quadratic_problem(), cfg)) == \
        _trace(run_inference(quadratic_problem(), cfg))


def test_ordered_concurrent_runs_identical():
    cfg = EngineConfig(n_init=5, n_acquisitions=15, seed=3, workers=4, completion="ordered")
    assert _trace(run_inference(quadratic_problem(), cfg)) == \
        _trace(run_inference(quadratic_problem(), cfg))


def test_concurrent_run_complete():
    res = run_inference(quadratic_problem(),
                        EngineConfig(n_init=4, n_acquisitions=12, workers=4))
    assert sorted(s.index for s in res.samples) == list(range(16))


def test_seeds_and_reproducibility():
    space, sim, obs = gaussian_toy(seed=1)
    prob = InferenceProblem(space, sim, obs, squared_error)
    res = run_inference(prob, EngineConfig(n_init=4, n_acquisitions=6, seed=5))
    for s in res.samples:
        assert s.seed == sample_seed(5, s.index)
        d, status, _, _ = evaluate(prob, s.theta, s.seed)
        assert status == "ok" and d == s.discrepancy


class Flaky:
    def __call__(self, theta, seed):
        if theta[0] > 0.7:
            raise RuntimeError("diverged")
        return (float(theta[0]) - 0.3) ** 2


def test_failed_simulations_logged_and_skipped():
    res = run_inference(InferenceProblem(UNIT, Flaky(), None, identity),
                        EngineConfig(n_init=8, n_acquisitions=4))
    failed = [s for s in res.samples if not s.ok]
    assert failed and all("diverged" in s.error and math.isnan(s.discrepancy) for s in failed)
    assert res.model.n == len(res.successful())


def test_all_failures_raise():
    def broken(theta, seed):
        raise RuntimeError("nope")
    with pytest.raises(InferenceError):
        run_inference(InferenceProblem(UNIT, broken, None, identity),
                      EngineConfig(n_init=3, n_acquisitions=0))


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(n_init=0, n_acquisitions=0)
    with pytest.raises(ValueError):
        EngineConfig(workers=0)
    with pytest.raises(ValueError):
        EngineConfig(epsilon_rule="median")


# -- posterior ----------------------------------------------------------------

def test_constant_surrogate_flat_posterior():
    model = gp.fit([[0.1], [0.5], [0.9]], [0.4, 0.4, 0.4])
    post = extract_posterior(model, UNIT)
    lp = post.log_density(np.linspace(0, 1, 11)[:, None])
    np.testing.assert_allclose(lp, lp[0], atol=1e-12)


def test_bowl_posterior_peaks_at_centre():
    x = np.linspace(0, 1, 41)[:, None]
    model = gp.fit(x, 5 * (x[:, 0] - 0.62) ** 2, gp.KernelConfig(noise_variance=1e-6))
    post = extract_posterior(model, UNIT)
    g = np.linspace(0, 1, 2001)[:, None]
    # within half the design spacing of the true centre
    assert g[np.argmax(post.log_density(g)), 0] == pytest.approx(0.62, abs=0.0125)
    assert post.map[0] == pytest.approx(0.62, abs=0.0125)


def test_flat_surrogate_map_is_prior_mode():
    space = ParameterSpace.from_priors({"f_dur": PriorSpec.truncated_gaussian(300, 100, 0, 600)})
    model = gp.fit([[0.2], [0.8]], [1.0, 1.0])
    assert extract_posterior(model, space).map[0] == 300.0


def test_epsilon_rules():
    model = gp.fit([[0.2], [0.8]], [1.0, 3.0])
    assert extract_posterior(model, UNIT, "empirical-min").epsilon == 1.0
    gp_eps = extract_posterior(model, UNIT, "gp-min").epsilon
    assert gp_eps == pytest.approx(min(gp.predict(model, model.points)[0]))


class Peak:
    """Stand-in posterior with a known argmax."""

    def __init__(self, space, peak):
        self.space, self.peak = space, np.asarray(peak)

    def log_density(self, u):
        theta = self.space.lower + np.atleast_2d(u) * (self.space.upper - self.space.lower)
        out = -np.sum((theta - self.peak) ** 2, axis=1) / 0.01
        return out if np.ndim(u) > 1 else float(out[0])


def test_map_known_peak_2d():
    space = ParameterSpace.from_priors({"p_rec": PriorSpec.uniform(0, 1),
                                        "p_sem": PriorSpec.uniform(0, 1)})
    est = map_estimate(Peak(space, [0.7, 0.9]), space)
    np.testing.assert_allclose(est, [0.7, 0.9], atol=0.5 / 200)


def test_map_known_peak_4d():
    space = ParameterSpace.from_priors({n: PriorSpec.uniform(0, 1) for n in "abcd"})
    est = map_estimate(Peak(space, [0.2, 0.7, 0.45, 0.9]), space)
    np.testing.assert_allclose(est, [0.2, 0.7, 0.45, 0.9], atol=1e-3)


def test_density_nonincreasing_in_surrogate_mean(monkeypatch):
    model = gp.fit([[0.5]], [1.0])
    post = PosteriorApprox(UNIT, model, epsilon=0.3)
    means = np.linspace(-2, 3, 51)
    monkeypatch.setattr(gp, "predict", lambda m, u: (means, np.full(len(means), 0.004)))
    lp = post.log_density(np.full((51, 1), 0.5))
    assert np.all(np.diff(lp) <= 0)


# -- rejection ABC -------------------------------------------------------------

def _toy_problem(seed=0):
    space, sim, obs = gaussian_toy(seed=seed)
    return InferenceProblem(space, sim, obs, squared_error), obs


def test_rejection_keep_everything():
    prob, _ = _toy_problem()
    res = rejection_abc(prob, 200, 1.0, np.random.default_rng(0))
    assert len(res.samples) == 200


def test_rejection_matches_conjugate():
    prob, obs = _toy_problem(seed=4)
    res = rejection_abc(prob, 10_000, 0.05, np.random.default_rng(1))
    assert abs(res.mean()[0] - conjugate_mean(obs, 20)) <= 0.1


def test_tighter_quantile_lowers_worst_kept():
    prob, _ = _toy_problem()
    worst = [rejection_abc(prob, 2000, q, np.random.default_rng(2)).discrepancies.max()
             for q in (0.5, 0.2, 0.05)]
    assert worst[0] >= worst[1] >= worst[2]


def test_rejection_validation():
    prob, _ = _toy_problem()
    with pytest.raises(ValueError):
        rejection_abc(prob, 0, 0.5)
    with pytest.raises(ValueError):
        rejection_abc(prob, 10, 0.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.integers(1, 50))
def test_conjugate_oracle_agrees_with_quadrature(ybar, n):
    x = np.linspace(-3, 3, 60001)
    w = stats.norm.pdf(x) * stats.norm.pdf(ybar, loc=x, scale=1 / math.sqrt(n))
    assert conjugate_mean(ybar, n) == pytest.approx((x * w).sum() / w.sum(), abs=1e-6)
