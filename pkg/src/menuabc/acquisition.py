"""Choosing where to simulate next.

Initial points come from the unscrambled Sobol sequence. Afterwards each
location minimizes ``LCB(x) + R(x)``, where ``LCB = mu - b * sigma`` from
the GP surrogate and ``R`` is a sum of Gaussian bumps centred on locations
still being simulated, so parallel workers spread out. With probability
``prior_draw_prob`` the location is a prior draw instead.
"""
from dataclasses import dataclass, asdict
import warnings

import numpy as np
from scipy.stats import qmc

from .gp import predict

ORIGINS = ("sobol", "acquisition", "prior-draw")


@dataclass(frozen=True)
class AcquisitionConfig:
    b: float = 1.0
    a_rep: float = 0.04
    l_rep: float = 0.04
    prior_draw_prob: float = 0.1
    n_candidates: int = 1024
    n_starts: int = 5
    refine_steps: int = 50
    initial_step: float = 0.0625

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("LCB multiplier b must be non-negative")
        if self.a_rep <= 0 or self.l_rep <= 0:
            raise ValueError("repulsion amplitude and scale must be positive")
        if not 0.0 <= self.prior_draw_prob <= 1.0:
            raise ValueError("prior_draw_prob must lie in [0, 1]")
        if self.n_candidates < 1 or self.n_starts < 1:
            raise ValueError("need at least one candidate and one start")

    def to_dict(self):
        return asdict(self)


def sobol_init(n, dims):
    """First ``n`` Sobol points in ``[0, 1]^dims``, skipping the origin."""
    if n < 0 or dims < 1:
        raise ValueError("need n >= 0 and dims >= 1")
    if n == 0:
        return np.zeros((0, dims))
    eng = qmc.Sobol(d=dims, scramble=False)
    eng.fast_forward(1)
    with warnings.catch_warnings():
        # balance warnings for n not a power of two are irrelevant here
        warnings.simplefilter("ignore", UserWarning)
        return eng.random(n)


def lcb(model, x, b=1.0):
    mean, var = predict(model, x)
    return mean - b * np.sqrt(var)


def repulsion(pending, x, a_rep=0.04, l_rep=0.04):
    """``sum_p a_rep * exp(-|x - p|^2 / l_rep)``; zero for no pending points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    xs = np.atleast_2d(x)
    pend = np.asarray(list(pending), dtype=float).reshape(-1, xs.shape[1])
    if pend.shape[0] == 0:
        out = np.zeros(xs.shape[0])
    else:
        d2 = np.sum((xs[:, None, :] - pend[None, :, :]) ** 2, axis=-1)
        out = a_rep * np.exp(-d2 / l_rep).sum(axis=1)
    return float(out[0]) if single else out


def acquisition_value(model, pending, x, cfg=AcquisitionConfig()):
    return lcb(model, x, cfg.b) + repulsion(pending, x, cfg.a_rep, cfg.l_rep)


def minimize_acquisition(model, pending, cfg, rng):
    """Candidate screening followed by compass-search refinement."""
    d = model.dim
    seed = int(rng.integers(0, 2**32 - 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        cand = qmc.Sobol(d=d, scramble=True, seed=seed).random(cfg.n_candidates)
    vals = acquisition_value(model, pending, cand, cfg)
    order = np.argsort(vals, kind="stable")[:cfg.n_starts]
    x = cand[order].copy()
    fx = vals[order].copy()
    step = np.full(x.shape[0], cfg.initial_step)
    eye = np.eye(d)
    moves = np.concatenate([eye, -eye])  # (2d, d)
    for _ in range(cfg.refine_steps):
        trial = np.clip(x[:, None, :] + step[:, None, None] * moves[None], 0.0, 1.0)
        tv = acquisition_value(model, pending, trial.reshape(-1, d), cfg).reshape(x.shape[0], -1)
        best = np.argmin(tv, axis=1)
        best_val = tv[np.arange(x.shape[0]), best]
        improved = best_val < fx
        x[improved] = trial[improved, best[improved]]
        fx[improved] = best_val[improved]
        step[~improved] *= 0.5
    i = int(np.argmin(fx))
    return x[i]


def next_location(model, pending, space, cfg=AcquisitionConfig(), rng=None):
    """Pick the next unit-cube location; returns ``(point, origin)``.

    Falls back to a prior draw when the surrogate has no data yet.
    """
    rng = np.random.default_rng() if rng is None else rng
    explore = rng.random() < cfg.prior_draw_prob
    if explore or model is None or model.n == 0:
        u = space.to_unit_cube(space.sample_prior(rng))
        return np.clip(u, 0.0, 1.0), "prior-draw"
    return minimize_acquisition(model, pending, cfg, rng), "acquisition"
