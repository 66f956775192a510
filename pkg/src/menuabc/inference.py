"""BOLFI-style inference loop, posterior extraction and rejection ABC.

The engine simulates at Sobol points first, then at locations picked by
:func:`menuabc.acquisition.next_location`, refitting the GP surrogate of
the discrepancy as results arrive. The approximate posterior over the unit
cube is::

    p(theta | y) ~ prior(theta) * Phi((eps - mu(theta)) / sqrt(var(theta) + noise))

with ``mu``/``var`` the surrogate's prediction and ``eps`` the smallest
predicted mean over the evaluated points (or the smallest observed
discrepancy).
"""
from concurrent.futures import ThreadPoolExecutor, FIRST_COMPLETED, wait
from dataclasses import dataclass, field, asdict
import csv
import logging
import math
import time
import warnings

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import qmc

from . import gp
from .acquisition import AcquisitionConfig, next_location, sobol_init
from .discrepancy import DiscrepancyConfig, discrepancy as summary_discrepancy

log = logging.getLogger(__name__)

EPSILON_RULES = ("gp-min", "empirical-min")
COMPLETION_MODES = ("as-completed", "ordered")


class InferenceError(RuntimeError):
    pass


@dataclass
class InferenceProblem:
    """What to infer.

    ``simulator(theta, seed)`` must be deterministic given its arguments.
    ``discrepancy`` is either a :class:`DiscrepancyConfig` (summaries are
    :class:`~menuabc.simulator.BehaviorSummary`) or any callable
    ``(observed, simulated) -> float``.
    """

    space: object
    simulator: object
    observed: object
    discrepancy: object = field(default_factory=DiscrepancyConfig)

    def distance(self, simulated):
        if isinstance(self.discrepancy, DiscrepancyConfig):
            return summary_discrepancy(self.observed, simulated, self.discrepancy)
        return float(self.discrepancy(self.observed, simulated))


@dataclass(frozen=True)
class EngineConfig:
    n_init: int = 8
    n_acquisitions: int = 32
    workers: int = 1
    refit_every: int = 1
    seed: int = 0
    epsilon_rule: str = "gp-min"
    completion: str = "as-completed"
    kernel: gp.KernelConfig = field(default_factory=gp.KernelConfig)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)

    def __post_init__(self):
        if self.n_init < 0 or self.n_acquisitions < 0 or self.n_init + self.n_acquisitions < 1:
            raise ValueError("simulation budget must be positive")
        if self.workers < 1 or self.refit_every < 1:
            raise ValueError("workers and refit_every must be >= 1")
        if self.epsilon_rule not in EPSILON_RULES:
            raise ValueError(f"unknown epsilon rule {self.epsilon_rule!r}")
        if self.completion not in COMPLETION_MODES:
            raise ValueError(f"unknown completion mode {self.completion!r}")

    @property
    def budget(self):
        return self.n_init + self.n_acquisitions

    def to_dict(self):
        return asdict(self)


@dataclass
class EvaluatedSample:
    index: int
    theta: np.ndarray
    unit_point: np.ndarray
    discrepancy: float
    seed: int
    origin: str
    wall_time: float
    status: str = "ok"
    error: str = ""

    @property
    def ok(self):
        return self.status == "ok"


def sample_seed(master_seed, index):
    """Per-sample simulator seed derived from the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _acquisition_rng(master_seed):
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(2**32,)))


def evaluate(problem, theta, seed):
    """Run the simulator and discrepancy once; returns ``(d, status, error, seconds)``."""
    t0 = time.perf_counter()
    try:
        sim = problem.simulator(theta, seed)
        d = float(problem.distance(sim))
        if not math.isfinite(d):
            raise InferenceError(f"non-finite discrepancy {d}")
        status, err = "ok", ""
    except Exception as exc:  # failures are logged and skipped
        log.warning("simulation failed at %s (seed %d): %r", theta, seed, exc)
        d, status, err = float("nan"), "failed", repr(exc)
    return d, status, err, time.perf_counter() - t0


# -- posterior -------------------------------------------------------------

@dataclass
class PosteriorApprox:
    space: object
    model: gp.SurrogateModel
    epsilon: float
    map: np.ndarray | None = None

    def log_density(self, u):
        """Unnormalized log density at unit-cube point(s) ``u``."""
        u = np.asarray(u, dtype=float)
        single = u.ndim <= 1
        us = np.atleast_2d(u).reshape(-1, self.space.dim)
        theta = self.space.lower + us * (self.space.upper - self.space.lower)
        lp = np.atleast_1d(self.space.log_prior_density(theta))
        mean, var = gp.predict(self.model, us)
        z = (self.epsilon - mean) / np.sqrt(var + self.model.cfg.noise_variance)
        out = lp + log_ndtr(z)
        return float(out[0]) if single else out

    def density(self, u):
        return np.exp(self.log_density(u))

    def to_dict(self, grid_points=None):
        names = self.space.names
        d = {"epsilon": self.epsilon,
             "map": self.space.as_dict(self.map) if self.map is not None else None,
             "axes": self.space.to_dict()}
        if grid_points is not None:
            d["grid"] = export_grid(self, grid_points)
        d["parameter_names"] = names
        return d


def extract_posterior(model, space, rule="gp-min"):
    if model.n == 0:
        raise InferenceError("posterior needs at least one evaluated point")
    if rule == "gp-min":
        eps = float(np.min(gp.predict(model, model.points)[0]))
    elif rule == "empirical-min":
        eps = float(np.min(model.targets))
    else:
        raise ValueError(f"unknown epsilon rule {rule!r}")
    post = PosteriorApprox(space, model, eps)
    post.map = map_estimate(post, space)
    return post


def _grid(dim, n):
    axes = [np.linspace(0.0, 1.0, n)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _compass_max(f, starts, steps=60, step0=0.05):
    x = starts.copy()
    fx = f(x)
    d = x.shape[1]
    moves = np.concatenate([np.eye(d), -np.eye(d)])
    step = np.full(x.shape[0], step0)
    for _ in range(steps):
        trial = np.clip(x[:, None, :] + step[:, None, None] * moves[None], 0.0, 1.0)
        tv = f(trial.reshape(-1, d)).reshape(x.shape[0], -1)
        best = np.argmax(tv, axis=1)
        bv = tv[np.arange(x.shape[0]), best]
        up = bv > fx
        x[up] = trial[up, best[up]]
        fx[up] = bv[up]
        step[~up] *= 0.5
    return x, fx


def map_estimate(posterior, space, grid_1d=2001, grid_2d=201):
    """Mode of the posterior in axis units (grid search up to 2-D)."""
    d = space.dim
    if d <= 2:
        g = _grid(d, grid_1d if d == 1 else grid_2d)
        u = g[int(np.argmax(posterior.log_density(g)))]
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            cand = qmc.Sobol(d=d, scramble=False).random(4096)
        lv = posterior.log_density(cand)
        starts = cand[np.argsort(-lv, kind="stable")[:8]]
        x, fx = _compass_max(posterior.log_density, starts)
        u = x[int(np.argmax(fx))]
    return space.from_unit_cube(u)


def posterior_mean(posterior, space, grid_1d=2001, grid_2d=201, n_qmc=2**14):
    """Posterior mean in axis units by quadrature (grid or quasi-Monte Carlo)."""
    d = space.dim
    if d <= 2:
        u = _grid(d, grid_1d if d == 1 else grid_2d)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            u = qmc.Sobol(d=d, scramble=False).random(n_qmc)
    lw = posterior.log_density(u)
    w = np.exp(lw - lw.max())
    theta = space.lower + u * (space.upper - space.lower)
    return (w[:, None] * theta).sum(axis=0) / w.sum()


def export_grid(posterior, n):
    """Log density on an export grid: full grid up to 2-D, MAP slices above."""
    space = posterior.space
    d = space.dim
    if d <= 2:
        u = _grid(d, n)
        theta = space.from_unit_cube(u)
        return {"kind": "full", "theta": theta.tolist(),
                "log_density": posterior.log_density(u).tolist()}
    centre = space.to_unit_cube(posterior.map)
    slices = {}
    line = np.linspace(0.0, 1.0, n)
    for i, name in enumerate(space.names):
        u = np.tile(centre, (n, 1))
        u[:, i] = line
        slices[name] = {"theta": space.from_unit_cube(u)[:, i].tolist(),
                        "log_density": posterior.log_density(u).tolist()}
    return {"kind": "map-slices", "slices": slices}


# -- engine ----------------------------------------------------------------

@dataclass
class InferenceResult:
    samples: list
    model: gp.SurrogateModel
    posterior: PosteriorApprox
    space: object
    config: EngineConfig

    @property
    def map(self):
        return self.posterior.map

    def successful(self):
        return [s for s in self.samples if s.ok]

    def write_samples_csv(self, path):
        """Deterministic sample trace (wall times are kept out of this file)."""
        names = self.space.names
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "origin", "seed", "status", *names,
                        *[f"u_{n}" for n in names], "discrepancy"])
            for s in self.samples:
                w.writerow([s.index, s.origin, s.seed, s.status,
                            *[repr(float(v)) for v in s.theta],
                            *[repr(float(v)) for v in s.unit_point],
                            repr(float(s.discrepancy))])

    def write_timings_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "wall_time_s", "error"])
            for s in self.samples:
                w.writerow([s.index, f"{s.wall_time:.6f}", s.error])


class _Trace:
    """Coordinator state: samples, pending points and the current surrogate."""

    def __init__(self, problem, cfg):
        self.problem = problem
        self.cfg = cfg
        self.samples = []
        self.model = gp.fit(np.zeros((0, problem.space.dim)), [], cfg.kernel,
                            dim=problem.space.dim)
        self._since_fit = 0

    def refit(self):
        ok = [s for s in self.samples if s.ok]
        pts = np.array([s.unit_point for s in ok]).reshape(-1, self.problem.space.dim)
        self.model = gp.fit(pts, [s.discrepancy for s in ok], self.cfg.kernel,
                            dim=self.problem.space.dim)
        self._since_fit = 0

    def incorporate(self, sample):
        self.samples.append(sample)
        if sample.ok:
            self._since_fit += 1
            if self._since_fit >= self.cfg.refit_every:
                self.refit()


def _make_sample(index, u, origin, problem, cfg, result):
    d, status, err, secs = result
    theta = problem.space.from_unit_cube(u)
    return EvaluatedSample(index, theta, np.asarray(u, dtype=float), d,
                           sample_seed(cfg.seed, index), origin, secs, status, err)


def run_inference(problem, cfg=EngineConfig()):
    """Run the full loop and return an :class:`InferenceResult`."""
    space = problem.space
    trace = _Trace(problem, cfg)
    rng = _acquisition_rng(cfg.seed)
    init = sobol_init(min(cfg.n_init, cfg.budget), space.dim)

    def choose(index, pending):
        if index < init.shape[0]:
            return init[index], "sobol"
        return next_location(trace.model, pending, space, cfg.acquisition, rng)

    def run_one(index, u):
        return evaluate(problem, space.from_unit_cube(u), sample_seed(cfg.seed, index))

    if cfg.workers == 1:
        for i in range(cfg.budget):
            u, origin = choose(i, [])
            trace.incorporate(_make_sample(i, u, origin, problem, cfg, run_one(i, u)))
    else:
        in_flight = {}
        next_index = 0
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            while next_index < cfg.budget or in_flight:
                while next_index < cfg.budget and len(in_flight) < cfg.workers:
                    pending = [v[0] for v in in_flight.values()]
                    u, origin = choose(next_index, pending)
                    fut = pool.submit(run_one, next_index, u)
                    in_flight[fut] = (u, origin, next_index)
                    next_index += 1
                if cfg.completion == "ordered":
                    # incorporate strictly in submission order: deterministic
                    done = [min(in_flight, key=lambda f: in_flight[f][2])]
                    wait(done)
                else:
                    done, _ = wait(list(in_flight), return_when=FIRST_COMPLETED)
                for fut in sorted(done, key=lambda f: in_flight[f][2]):
                    u, origin, idx = in_flight.pop(fut)
                    trace.incorporate(_make_sample(idx, u, origin, problem, cfg, fut.result()))

    if not any(s.ok for s in trace.samples):
        raise InferenceError("every simulation failed")
    trace.refit()
    posterior = extract_posterior(trace.model, space, cfg.epsilon_rule)
    return InferenceResult(trace.samples, trace.model, posterior, space, cfg)


# -- rejection ABC -----------------------------------------------------------

@dataclass
class RejectionResult:
    samples: np.ndarray  # accepted parameter vectors, best first
    discrepancies: np.ndarray  # matching discrepancies
    threshold: float
    all_samples: np.ndarray
    all_discrepancies: np.ndarray
    seeds: np.ndarray
    accepted_index: np.ndarray  # positions in ``all_samples``

    def mean(self):
        return self.samples.mean(axis=0)


def rejection_abc(problem, n_samples, accept_quantile, rng=None, workers=1):
    """Simulate at prior draws and keep the lowest-discrepancy fraction."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if not 0.0 < accept_quantile <= 1.0:
        raise ValueError("accept_quantile must lie in (0, 1]")
    rng = np.random.default_rng() if rng is None else rng
    thetas = problem.space.sample_prior(rng, size=n_samples)
    seeds = rng.integers(0, 2**63 - 1, size=n_samples)

    def one(i):
        return evaluate(problem, thetas[i], int(seeds[i]))[0]

    if workers == 1:
        ds = np.array([one(i) for i in range(n_samples)])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ds = np.array(list(pool.map(one, range(n_samples))))
    ok = np.flatnonzero(np.isfinite(ds))
    if ok.size == 0:
        raise InferenceError("every simulation failed")
    k = max(1, int(math.ceil(accept_quantile * ok.size - 1e-9)))
    order = ok[np.argsort(ds[ok], kind="stable")][:k]
    return RejectionResult(thetas[order], ds[order], float(ds[order[-1]]),
                           thetas, ds, seeds, order)
