"""Gaussian likelihood with a Gaussian prior: the posterior is known exactly."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..prior import LOG_2PI, GaussianPrior
from .base import Model, ModelError


class ConjugateGaussianModel(Model):
    """y ~ N(x, noise_variance * I) with prior x ~ N(mean, covariance)."""

    name = "conjugate"

    def __init__(self, prior: GaussianPrior, y, noise_variance: float):
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape != (prior.dim,):
            raise ModelError(f"observation length {y.size} does not match prior dimension {prior.dim}")
        if not noise_variance > 0:
            raise ModelError("noise variance must be positive")
        self.prior = prior
        self.y = y
        self.noise_variance = float(noise_variance)
        self._const = -0.5 * y.size * (LOG_2PI + np.log(self.noise_variance))

    def batch(self, states):
        r = np.asarray(states, dtype=float) - self.y
        return self._const - 0.5 * np.sum(r * r, axis=1) / self.noise_variance

    def describe(self):
        return {"kind": self.name, "dim": int(self.prior.dim), "noise_variance": self.noise_variance}


def conjugate_loglik(model: ConjugateGaussianModel, x) -> float:
    return model(x)


def conjugate_posterior(model: ConjugateGaussianModel, prior: GaussianPrior | None = None):
    """Posterior mean and covariance via precision addition."""
    prior = model.prior if prior is None else prior
    if prior.dim != model.y.size:
        raise ModelError("prior and observation dimensions differ")
    n = prior.dim
    prior_prec = cho_solve((prior.factor, True), np.eye(n))
    precision = prior_prec + np.eye(n) / model.noise_variance
    cf = cho_factor(precision, lower=True)
    cov = cho_solve(cf, np.eye(n))
    mean = cho_solve(cf, prior_prec @ prior.mean + model.y / model.noise_variance)
    return mean, 0.5 * (cov + cov.T)


def make_conjugate_problem(dim: int = 10, seed: int = 0, noise_variance: float = 1.0):
    """Random correlated prior with data drawn from the model itself."""
    rng = np.random.default_rng(seed)
    mean = rng.normal(0.0, 1.0, dim)
    g = rng.normal(size=(dim, dim)) / np.sqrt(dim)
    cov = g @ g.T + 0.5 * np.eye(dim)
    prior = GaussianPrior(mean, cov)
    x_true = prior.sample(rng)
    y = x_true + np.sqrt(noise_variance) * rng.standard_normal(dim)
    return ConjugateGaussianModel(prior, y, noise_variance)
