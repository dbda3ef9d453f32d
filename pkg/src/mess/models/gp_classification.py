"""Binary GP classification with a logistic link on latent function values."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from ..prior import GaussianPrior
from .base import Model, ModelError


def squared_exponential(a, b, amplitude: float, lengthscale: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    d2 = cdist(a, b, "sqeuclidean")
    return amplitude**2 * np.exp(-0.5 * d2 / lengthscale**2)


class GpClassificationModel(Model):
    """Labels z_i in {-1, +1}; likelihood prod_i sigmoid(z_i f_i), prior f ~ GP."""

    name = "gp_classification"

    def __init__(self, inputs, labels, amplitude=1.0, lengthscale=1.0, jitter=1e-6):
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        labels = np.asarray(labels, dtype=float).reshape(-1)
        if labels.size != inputs.shape[0]:
            raise ModelError("one label per input is required")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ModelError("labels must be -1 or +1")
        self.inputs = inputs
        self.labels = labels
        self.amplitude = float(amplitude)
        self.lengthscale = float(lengthscale)
        self.jitter = float(jitter)
        k = squared_exponential(inputs, inputs, amplitude, lengthscale)
        k[np.diag_indices_from(k)] += jitter * amplitude**2
        self.prior = GaussianPrior(np.zeros(labels.size), k)

    def batch(self, states):
        f = np.asarray(states, dtype=float)
        # log sigmoid(t) = -log(1 + exp(-t)), overflow-safe
        return -np.sum(np.logaddexp(0.0, -self.labels * f), axis=1)

    def describe(self):
        return {
            "kind": self.name,
            "dim": int(self.prior.dim),
            "amplitude": self.amplitude,
            "lengthscale": self.lengthscale,
        }


def gp_classification_loglik(model: GpClassificationModel, f) -> float:
    return model(f)


def make_gp_classification(n_points=200, seed=0, separation=1.0, amplitude=1.0, lengthscale=1.0):
    """Two overlapping Gaussian clusters in the plane, labelled -1 and +1."""
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(n_points) < 0.5, -1.0, 1.0)
    centres = separation * np.array([1.0, 1.0]) / np.sqrt(2.0)
    inputs = labels[:, None] * centres + rng.standard_normal((n_points, 2))
    return GpClassificationModel(inputs, labels, amplitude, lengthscale)
