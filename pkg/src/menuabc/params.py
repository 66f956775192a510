"""Bounded, named parameter axes with independent priors."""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import ndtr
from scipy.stats import truncnorm


class ParameterError(ValueError):
    """Raised for malformed priors, axes or parameter vectors."""


PRIOR_KINDS = ("truncated-gaussian", "uniform")


@dataclass(frozen=True)
class PriorSpec:
    """Axis-wise prior: a truncated Gaussian or a uniform on ``[min, max]``.

    ``mean`` and ``std`` are ignored for the uniform kind.
    """

    kind: str
    min: float
    max: float
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ParameterError(f"unknown prior kind {self.kind!r}")
        if not self.min < self.max:
            raise ParameterError(f"prior requires min < max, got [{self.min}, {self.max}]")
        if self.kind == "truncated-gaussian" and not self.std > 0:
            raise ParameterError("truncated-gaussian prior requires std > 0")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def truncated_gaussian(cls, mean, std, lo, hi):
        return cls("truncated-gaussian", float(lo), float(hi), float(mean), float(std))

    def to_dict(self):
        if self.kind == "uniform":
            return {"kind": self.kind, "min": self.min, "max": self.max}
        return {"kind": self.kind, "mean": self.mean, "std": self.std,
                "min": self.min, "max": self.max}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        unknown = set(d) - {"min", "max", "mean", "std"}
        if unknown:
            raise ParameterError(f"unknown prior field(s): {sorted(unknown)}")
        if kind == "uniform":
            return cls.uniform(d["min"], d["max"])
        return cls.truncated_gaussian(d["mean"], d["std"], d["min"], d["max"])

    # -- density ---------------------------------------------------------

    def _log_mass(self):
        """Log of the untruncated normal mass inside ``[min, max]``."""
        a = (self.min - self.mean) / self.std
        b = (self.max - self.mean) / self.std
        if a > 0:
            # both limits above the mean: upper tails avoid cancellation
            return float(np.log(ndtr(-a) - ndtr(-b)))
        return float(np.log(ndtr(b) - ndtr(a)))

    def log_pdf(self, x):
        """Log density at ``x`` (array-like); ``-inf`` outside the support."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.min) & (x <= self.max)
        if self.kind == "uniform":
            val = np.full(x.shape, -math.log(self.max - self.min))
        else:
            z = (x - self.mean) / self.std
            val = (-0.5 * z * z - 0.5 * math.log(2 * math.pi)
                   - math.log(self.std) - self._log_mass())
        return np.where(inside, val, -np.inf)

    def sample(self, rng, size=None):
        """Draw from the prior; truncated Gaussians by rejection."""
        if self.kind == "uniform":
            return rng.uniform(self.min, self.max, size=size)
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(n)
        filled = 0
        if self._log_mass() < math.log(0.05):
            # rejection would stall; invert the truncated CDF instead
            a = (self.min - self.mean) / self.std
            b = (self.max - self.mean) / self.std
            out[:] = truncnorm.rvs(a, b, loc=self.mean, scale=self.std,
                                   size=n, random_state=rng)
            filled = n
        while filled < n:
            need = n - filled
            draw = rng.normal(self.mean, self.std, size=max(need, 16))
            ok = draw[(draw >= self.min) & (draw <= self.max)][:need]
            out[filled:filled + ok.size] = ok
            filled += ok.size
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def mode(self):
        if self.kind == "uniform":
            return 0.5 * (self.min + self.max)
        return float(np.clip(self.mean, self.min, self.max))


@dataclass(frozen=True)
class ParameterAxis:
    name: str
    lower: float
    upper: float
    prior: PriorSpec

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ParameterError(f"axis {self.name!r}: lower must be < upper")
        if self.prior.min < self.lower or self.prior.max > self.upper:
            raise ParameterError(f"axis {self.name!r}: prior support exceeds bounds")

    @classmethod
    def from_prior(cls, name, prior):
        return cls(name, prior.min, prior.max, prior)


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered collection of axes. Immutable after construction."""

    axes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate axis names in {names}")

    @classmethod
    def from_priors(cls, priors):
        """Build from a mapping ``name -> PriorSpec`` (bounds = prior support)."""
        return cls(tuple(ParameterAxis.from_prior(k, p) for k, p in priors.items()))

    @property
    def names(self):
        return [a.name for a in self.axes]

    @property
    def dim(self):
        return len(self.axes)

    @property
    def lower(self):
        return np.array([a.lower for a in self.axes])

    @property
    def upper(self):
        return np.array([a.upper for a in self.axes])

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1:] != (self.dim,):
            raise ParameterError(
                f"expected {self.dim} coordinate(s), got shape {theta.shape}")
        return theta

    def sample_prior(self, rng, size=None):
        """One vector (``size=None``) or an ``(size, dim)`` array of prior draws."""
        if self.dim == 0:
            raise ParameterError("cannot sample an empty parameter space")
        cols = [a.prior.sample(rng, size=size) for a in self.axes]
        if size is None:
            return np.array(cols, dtype=float)
        return np.stack(cols, axis=-1)

    def log_prior_density(self, theta):
        theta = self._check(theta)
        total = np.zeros(theta.shape[:-1])
        for i, a in enumerate(self.axes):
            total = total + a.prior.log_pdf(theta[..., i])
        return total if total.ndim else float(total)

    def to_unit_cube(self, theta):
        theta = self._check(theta)
        lo, hi = self.lower, self.upper
        if np.any(theta < lo) or np.any(theta > hi):
            raise ParameterError("theta outside the parameter bounds")
        return (theta - lo) / (hi - lo)

    def from_unit_cube(self, u):
        u = self._check(u)
        if np.any(u < 0) or np.any(u > 1):
            raise ParameterError("unit-cube point outside [0, 1]^d")
        lo, hi = self.lower, self.upper
        return lo + u * (hi - lo)

    def prior_mode(self):
        return np.array([a.prior.mode() for a in self.axes])

    def as_dict(self, theta):
        theta = self._check(theta)
        return {n: float(v) for n, v in zip(self.names, theta)}

    def to_dict(self):
        return {a.name: a.prior.to_dict() for a in self.axes}
