"""End-to-end runs: synthetic observations, inference and artifact writing."""
import json
import os
import platform

import numpy as np
import scipy

from . import __version__, kernel
from .config import PRESET_VERSION, SCHEMA_VERSION
from .inference import (EngineConfig, InferenceProblem, posterior_mean,
                        rejection_abc, run_inference)
from .report import recovery, write_report
from .simulator import BehaviorSummary, MenuSimulator, summarize, write_sessions_csv

# spawn keys for seeds derived from the master seed; sample seeds use (i,)
_OBSERVED_KEY = 2**32 + 1
_MAP_KEY = 2**32 + 2
_REJECTION_KEY = 2**32 + 3
_SIMULATE_KEY = 2**32 + 4


def derived_seed(master, key):
    ss = np.random.SeedSequence(master, spawn_key=(key,))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_simulator(cfg):
    b = cfg.budgets
    return MenuSimulator(cfg.names, cfg.variant, cfg.fixed, cfg.layout, cfg.qlearning,
                         b.train_episodes, b.n_sessions, b.subset)


def engine_config(cfg):
    b = cfg.budgets
    return EngineConfig(n_init=b.n_init, n_acquisitions=b.n_acquisitions,
                        workers=b.workers, refit_every=b.refit_every, seed=cfg.seed,
                        epsilon_rule=cfg.epsilon_rule, completion=cfg.completion,
                        kernel=cfg.kernel, acquisition=cfg.acquisition)


def observed_summary(cfg, sim=None):
    """Observed data: the configured summary file or a simulation at the truth."""
    if cfg.observed is not None:
        return BehaviorSummary.from_json(cfg.observed)
    sim = sim or make_simulator(cfg)
    return sim(cfg.truth_vector(), derived_seed(cfg.seed, _OBSERVED_KEY))


def build_problem(cfg):
    sim = make_simulator(cfg)
    return InferenceProblem(cfg.space(), sim, observed_summary(cfg, sim), cfg.discrepancy)


def _json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(cfg, command, out, outputs, extra=None):
    manifest = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "preset_version": PRESET_VERSION,
        "package_version": __version__,
        "kernel_backend": kernel.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "master_seed": cfg.seed,
        "derived_seeds": {
            "observed": derived_seed(cfg.seed, _OBSERVED_KEY),
            "map_simulation": derived_seed(cfg.seed, _MAP_KEY),
            "rejection": derived_seed(cfg.seed, _REJECTION_KEY),
            "simulate": derived_seed(cfg.seed, _SIMULATE_KEY),
        },
        "config": cfg.to_dict(),
        "outputs": sorted(outputs),
    }
    manifest.update(extra or {})
    _json(manifest, os.path.join(out, "manifest.json"))
    return manifest


def run_simulate(cfg, theta=None, out=None):
    """Train and simulate at ``theta`` (default: the configured truth)."""
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    sim = make_simulator(cfg)
    theta = cfg.truth_vector() if theta is None else list(theta)
    sessions = sim.sessions(theta, derived_seed(cfg.seed, _SIMULATE_KEY))
    summary = summarize(sessions, cfg.budgets.subset, n_items=cfg.layout.n_items)
    write_sessions_csv(sessions, os.path.join(out, "sessions.csv"))
    summary.to_json(os.path.join(out, "summary.json"))
    write_manifest(cfg, "simulate", out, ["sessions.csv", "summary.json", "manifest.json"],
                   {"theta": dict(zip(cfg.names, map(float, theta)))})
    return summary


def run_study(cfg, out=None):
    """BOLFI run plus report; returns the :class:`InferenceResult`."""
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    problem = build_problem(cfg)
    result = run_inference(problem, engine_config(cfg))
    space = problem.space

    result.write_samples_csv(os.path.join(out, "samples.csv"))
    result.write_timings_csv(os.path.join(out, "timings.csv"))
    problem.observed.to_json(os.path.join(out, "summary_obs.json"))
    predicted = problem.simulator(result.map, derived_seed(cfg.seed, _MAP_KEY))
    predicted.to_json(os.path.join(out, "summary_map.json"))
    rows = write_report(problem.observed, predicted, os.path.join(out, "report.csv"),
                        os.path.join(out, "report_histograms.csv"))

    post = result.posterior.to_dict(grid_points=cfg.export_grid)
    post["posterior_mean"] = space.as_dict(posterior_mean(result.posterior, space))
    post["epsilon_rule"] = cfg.epsilon_rule
    post["standardization"] = result.model.to_dict()["standardization"]
    post["n_evaluated"] = len(result.samples)
    post["n_failed"] = len(result.samples) - len(result.successful())
    if cfg.observed is None:
        post["recovery"] = recovery(cfg.names, cfg.truth_vector(), result.map)
    post["prediction_errors"] = rows
    _json(post, os.path.join(out, "posterior.json"))
    write_manifest(cfg, "infer", out,
                   ["samples.csv", "timings.csv", "posterior.json", "summary_obs.json",
                    "summary_map.json", "report.csv", "report_histograms.csv",
                    "manifest.json"])
    return result


def run_rejection(cfg, out=None):
    """Rejection ABC with the configured prior draw count and quantile."""
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    problem = build_problem(cfg)
    rng = np.random.default_rng(derived_seed(cfg.seed, _REJECTION_KEY))
    b = cfg.budgets
    res = rejection_abc(problem, b.rejection_samples, b.accept_quantile, rng, b.workers)
    names = cfg.names
    accepted = set(map(int, res.accepted_index))
    with open(os.path.join(out, "samples.csv"), "w") as fh:
        fh.write(",".join(["index", "seed", *names, "discrepancy", "accepted"]) + "\n")
        for i, (th, d, s) in enumerate(zip(res.all_samples, res.all_discrepancies, res.seeds)):
            fh.write(",".join([str(i), str(int(s)), *[repr(float(v)) for v in th],
                               repr(float(d)), str(int(i in accepted))]) + "\n")
    problem.observed.to_json(os.path.join(out, "summary_obs.json"))
    post = {"parameter_names": names, "threshold": res.threshold,
            "n_accepted": int(len(res.samples)),
            "posterior_mean": problem.space.as_dict(res.mean())}
    if cfg.observed is None:
        post["recovery"] = recovery(names, cfg.truth_vector(), res.mean())
    _json(post, os.path.join(out, "posterior.json"))
    write_manifest(cfg, "reject", out,
                   ["samples.csv", "posterior.json", "summary_obs.json", "manifest.json"])
    return res


def run_report(out):
    """Rebuild the comparison tables from the summaries in ``out``."""
    return write_report(os.path.join(out, "summary_obs.json"),
                        os.path.join(out, "summary_map.json"),
                        os.path.join(out, "report.csv"),
                        os.path.join(out, "report_histograms.csv"))
