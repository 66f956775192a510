"""Gaussian location toy problem with a closed-form posterior.

The simulator returns the mean of ``n_obs`` draws from ``Normal(theta, 1)``;
the discrepancy is the squared difference of means.
"""
import numpy as np

from .gp import KernelConfig
from .params import ParameterSpace, PriorSpec

# The default surrogate constants suit discrepancies of order 0.01-0.1; the
# toy's squared error spans several units over the prior and is nearly
# noiseless at its minimum, so the surrogate is rescaled to match.
TOY_KERNEL = KernelConfig(variance=1.0, lengthscale=0.2, noise_variance=0.02)


class GaussianMeanSimulator:
    def __init__(self, n_obs=20):
        self.n_obs = n_obs

    def __call__(self, theta, seed):
        rng = np.random.default_rng(seed)
        return float(rng.normal(float(np.atleast_1d(theta)[0]), 1.0, self.n_obs).mean())


def squared_error(observed, simulated):
    return (observed - simulated) ** 2


def gaussian_toy(theta_star=0.5, n_obs=20, seed=0, prior=None):
    """Return ``(space, simulator, observed)`` for the toy problem."""
    prior = prior or PriorSpec.truncated_gaussian(0.0, 1.0, -3.0, 3.0)
    space = ParameterSpace.from_priors({"theta": prior})
    sim = GaussianMeanSimulator(n_obs)
    return space, sim, sim(theta_star, seed)
