"""Gaussian-process surrogate of the discrepancy over the unit cube.

Zero-mean GP with a Matern-3/2 kernel and fixed hyperparameters. By
default targets are centred on their sample mean before fitting and the
mean is added back in :func:`predict`; ``centre=False`` gives the plain
zero-mean GP.
"""
from dataclasses import dataclass, asdict
import json
import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class KernelConfig:
    variance: float = 0.01
    lengthscale: float = 0.1
    noise_variance: float = 0.05

    def __post_init__(self):
        if min(self.variance, self.lengthscale, self.noise_variance) <= 0:
            raise ValueError("kernel parameters must be strictly positive")

    def to_dict(self):
        return asdict(self)


def _pairwise_dist(x1, x2):
    diff = x1[:, None, :] - x2[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def matern32(x, x2, cfg=KernelConfig()):
    """Kernel value(s). Scalars/vectors give a float; 2-D arrays a matrix."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.ndim <= 1 and x2.ndim <= 1:
        r = float(np.linalg.norm(np.atleast_1d(x) - np.atleast_1d(x2)))
    else:
        r = _pairwise_dist(np.atleast_2d(x), np.atleast_2d(x2))
    s = SQRT3 * r / cfg.lengthscale
    return cfg.variance * (1.0 + s) * np.exp(-s)


@dataclass(frozen=True)
class SurrogateModel:
    """Fitted GP. Immutable; refitting produces a new model."""

    points: np.ndarray
    targets: np.ndarray
    cfg: KernelConfig
    offset: float
    _chol: tuple | None
    _alpha: np.ndarray | None
    centred: bool = True

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def to_dict(self):
        return {"points": self.points.tolist(), "targets": self.targets.tolist(),
                "dim": self.dim, "kernel": self.cfg.to_dict(),
                "standardization": "mean-centred" if self.centred else "none"}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, d):
        return fit(d["points"], d["targets"], KernelConfig(**d["kernel"]),
                   dim=d.get("dim"), centre=d.get("standardization") != "none")


def fit(points, targets, cfg=KernelConfig(), dim=None, centre=True):
    """Condition the GP on ``(points, targets)``."""
    targets = np.asarray(targets, dtype=float).reshape(-1)
    points = np.asarray(points, dtype=float)
    if targets.size == 0:
        d = dim if dim is not None else (points.shape[-1] if points.ndim == 2 else 1)
        return SurrogateModel(np.zeros((0, d)), targets, cfg, 0.0, None, None, centre)
    points = points.reshape(targets.size, -1)
    if not np.all(np.isfinite(targets)):
        raise ValueError("GP targets must be finite")
    offset = float(targets.mean()) if centre else 0.0
    K = matern32(points, points, cfg)
    K[np.diag_indices_from(K)] += cfg.noise_variance
    chol = cho_factor(K, lower=True)
    alpha = cho_solve(chol, targets - offset)
    return SurrogateModel(points, targets, cfg, offset, chol, alpha, centre)


def predict(model, x):
    """Posterior mean and latent variance (no observation noise).

    ``x`` may be one point of shape ``(d,)`` (returns floats) or an array of
    shape ``(m, d)`` (returns arrays).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    xs = np.atleast_2d(x).reshape(-1, model.dim) if not single else x.reshape(1, -1)
    if xs.shape[1] != model.dim:
        raise ValueError(f"expected points of dimension {model.dim}")
    if model.n == 0:
        mean = np.zeros(xs.shape[0])
        var = np.full(xs.shape[0], model.cfg.variance)
    else:
        ks = matern32(xs, model.points, model.cfg)
        mean = model.offset + ks @ model._alpha
        v = solve_triangular(model._chol[0], ks.T, lower=True)
        var = model.cfg.variance - np.sum(v * v, axis=0)
        var = np.maximum(var, 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var
