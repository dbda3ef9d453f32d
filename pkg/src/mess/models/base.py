"""Shared interface for the target models.

A model owns its Gaussian prior (in sampler coordinates), is callable as a
log-likelihood, and evaluates stacks of states row by row through
``batch``.  ``batch`` must treat rows independently: splitting a stack into
chunks may never change a value.
"""

from __future__ import annotations

import numpy as np

from ..prior import GaussianPrior


class ModelError(ValueError):
    pass


class Model:
    name = "model"
    prior: GaussianPrior

    def batch(self, states) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.prior.dim,):
            raise ModelError(f"expected a state of length {self.prior.dim}, got shape {x.shape}")
        return float(self.batch(x[None, :])[0])

    def full_state(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def component_names(self) -> list[str]:
        n = self.full_state(self.prior.mean).shape[0]
        return [f"x{i}" for i in range(n)]

    def describe(self) -> dict:
        return {"kind": self.name, "dim": int(self.prior.dim)}


class PriorOnlyModel(Model):
    """Constant log-likelihood: the posterior is the prior itself."""

    name = "prior_only"

    def __init__(self, prior: GaussianPrior, level: float = 0.0):
        self.prior = prior
        self.level = float(level)

    def batch(self, states):
        states = np.asarray(states, dtype=float)
        return np.full(states.shape[0], self.level)
