"""Gaussian priors with a cached Cholesky factor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

LOG_2PI = float(np.log(2.0 * np.pi))

# smallest / largest factor diagonal below this is treated as singular
_CONDITION_FLOOR = 1e-10


class PriorError(ValueError):
    pass


class GaussianPrior:
    """Multivariate normal N(mean, covariance) on R^n.

    The lower-triangular factor is computed once; the object is immutable
    afterwards and safe to share between threads.
    """

    def __init__(self, mean, covariance):
        mean = np.array(mean, dtype=float, ndmin=1)
        cov = np.array(covariance, dtype=float, ndmin=2)
        if mean.ndim != 1:
            raise PriorError("mean must be a vector")
        n = mean.shape[0]
        if n == 0:
            cov = np.zeros((0, 0))
        if cov.shape != (n, n):
            raise PriorError(f"covariance shape {cov.shape} does not match mean length {n}")
        scale = max(np.max(np.abs(cov)), 1.0) if n else 1.0
        if n and np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise PriorError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            factor = np.linalg.cholesky(cov) if n else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise PriorError("covariance is not positive definite") from exc
        if n:
            diag = np.diag(factor)
            if not np.all(np.isfinite(factor)) or diag.min() < _CONDITION_FLOOR * diag.max():
                raise PriorError("covariance is numerically singular")
        for arr in (mean, cov, factor):
            arr.setflags(write=False)
        self.mean = mean
        self.covariance = cov
        self.factor = factor
        self._log_det = 2.0 * float(np.sum(np.log(np.diag(factor)))) if n else 0.0
        # diagonal covariances skip the dense triangular algebra
        self._std = np.sqrt(np.diag(cov)) if n and not np.any(cov - np.diag(np.diag(cov))) else None

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def __repr__(self):
        return f"GaussianPrior(dim={self.dim})"

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw mean + factor @ z, consuming exactly ``dim`` standard normals."""
        z = rng.standard_normal(self.dim)
        if self._std is not None:
            return self.mean + self._std * z
        return self.mean + self.factor @ z

    def scaled_draw(self, z) -> np.ndarray:
        """factor @ z, without the mean."""
        if self._std is not None:
            return self._std * z
        return self.factor @ z

    def log_density(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise PriorError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        if self.dim == 0:
            return 0.0
        if self._std is not None:
            w = (x - self.mean) / self._std
        else:
            w = solve_triangular(self.factor, x - self.mean, lower=True, check_finite=False)
        return -0.5 * (self.dim * LOG_2PI + self._log_det + float(w @ w))

    def condition_on_exact(self, indices, values) -> "ConditionedPrior":
        """Condition on ``x[indices] == values`` and drop those coordinates.

        Returns the reduced prior over the remaining coordinates together
        with the bookkeeping needed to rebuild full-length vectors.
        """
        idx = np.asarray(indices, dtype=int).reshape(-1)
        vals = np.asarray(values, dtype=float).reshape(-1)
        n = self.dim
        if idx.shape != vals.shape:
            raise PriorError("indices and values must have equal length")
        if len(set(idx.tolist())) != idx.size:
            raise PriorError("conditioning indices must be distinct")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise PriorError(f"conditioning index out of range for dimension {n}")
        free = np.setdiff1d(np.arange(n), idx)
        if idx.size == 0:
            reduced = self
        else:
            s_ff = self.covariance[np.ix_(free, free)]
            s_fo = self.covariance[np.ix_(free, idx)]
            s_oo = self.covariance[np.ix_(idx, idx)]
            try:
                c_oo = np.linalg.cholesky(s_oo)
            except np.linalg.LinAlgError as exc:
                raise PriorError("conditioning block is singular") from exc
            # gain = s_fo @ inv(s_oo), via two triangular solves
            tmp = solve_triangular(c_oo, s_fo.T, lower=True)
            gain = solve_triangular(c_oo.T, tmp, lower=False).T
            mean = self.mean[free] + gain @ (vals - self.mean[idx])
            cov = s_ff - gain @ s_fo.T
            reduced = GaussianPrior(mean, 0.5 * (cov + cov.T))
        return ConditionedPrior(reduced, free, idx, vals, n)


@dataclass(frozen=True)
class ConditionedPrior:
    """Reduced-dimension prior plus the map back to the full coordinates."""

    prior: GaussianPrior
    free_indices: np.ndarray
    fixed_indices: np.ndarray
    fixed_values: np.ndarray
    full_dim: int

    def expand(self, x_reduced) -> np.ndarray:
        x_reduced = np.asarray(x_reduced, dtype=float)
        out = np.empty(x_reduced.shape[:-1] + (self.full_dim,))
        out[..., self.free_indices] = x_reduced
        out[..., self.fixed_indices] = self.fixed_values
        return out

    def reduce(self, x_full) -> np.ndarray:
        return np.asarray(x_full, dtype=float)[..., self.free_indices]


def rotate_pair(x, nu, angle, mean=None):
    """Rotate (x, nu) by ``angle`` on the ellipse centred at ``mean``.

    Returns ``(x_new, nu_new)`` with
    x_new = (x - mean) cos(angle) + (nu - mean) sin(angle) + mean and
    nu_new = (nu - mean) cos(angle) - (x - mean) sin(angle) + mean.
    """
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if x.shape != nu.shape:
        raise PriorError(f"shape mismatch: {x.shape} vs {nu.shape}")
    if mean is None:
        mean = np.zeros_like(x)
    mean = np.asarray(mean, dtype=float)
    if mean.shape != x.shape:
        raise PriorError(f"shape mismatch: mean {mean.shape} vs state {x.shape}")
    c, s = np.cos(angle), np.sin(angle)
    dx, dnu = x - mean, nu - mean
    return dx * c + dnu * s + mean, dnu * c - dx * s + mean
