"""One-dimensional blind deconvolution: d = w * c + e with unknown w and c.

The sampler state is (w, c_free): the kernel followed by the signal entries
that are not pinned by exact observations.  By default the pinned entries
form a contiguous block at the end of the record: pins spread through the
signal tie the conditional mean to one sign everywhere and suppress the
mirrored mode (w, c) -> (-w, -c).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import block_diag

from ..prior import LOG_2PI, ConditionedPrior, GaussianPrior
from .base import Model, ModelError
from .gp_classification import squared_exponential


def convolve(w, c, mode: str = "truncated") -> np.ndarray:
    """Convolve kernels ``w`` (..., kw) with signals ``c`` (..., n), keeping n samples.

    ``truncated`` keeps the first n samples of the full linear convolution;
    ``circular`` wraps around.  Lags are accumulated in a fixed order so the
    result for a row never depends on the other rows.
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    kw, n = w.shape[-1], c.shape[-1]
    out = np.zeros(np.broadcast_shapes(w.shape[:-1], c.shape[:-1]) + (n,))
    for j in range(kw):
        if mode == "truncated":
            if j >= n:
                break
            out[..., j:] += w[..., j, None] * c[..., : n - j]
        elif mode == "circular":
            out += w[..., j, None] * np.roll(c, j, axis=-1)
        else:
            raise ModelError(f"unknown convolution mode {mode!r}")
    return out


@dataclass(frozen=True)
class BDConfig:
    n: int = 24
    kw: int = 12
    noise_variance: float = 0.5
    kernel_amplitude: float = 1.0
    kernel_lengthscale: float = 2.0
    signal_amplitude: float = 1.0
    signal_lengthscale: float = 1.0
    n_exact: int = 4
    exact_placement: str = "tail"
    mode: str = "truncated"
    jitter: float = 1e-6

    def exact_indices(self) -> np.ndarray:
        if self.n_exact == 0:
            return np.zeros(0, dtype=int)
        if self.exact_placement == "tail":
            return np.arange(self.n - self.n_exact, self.n)
        if self.exact_placement != "spread":
            raise ModelError(f"unknown exact_placement {self.exact_placement!r}")
        return np.round(np.linspace(0, self.n - 1, self.n_exact + 2)[1:-1]).astype(int)


def _se_prior(size, amplitude, lengthscale, jitter):
    t = np.arange(size, dtype=float)
    k = squared_exponential(t, t, amplitude, lengthscale)
    k[np.diag_indices_from(k)] += jitter * amplitude**2
    return GaussianPrior(np.zeros(size), k)


def bd_priors(config: BDConfig):
    """Zero-mean squared-exponential priors for the kernel and the signal."""
    kernel = _se_prior(config.kw, config.kernel_amplitude, config.kernel_lengthscale, config.jitter)
    signal = _se_prior(config.n, config.signal_amplitude, config.signal_lengthscale, config.jitter)
    return kernel, signal


class BlindDeconvolutionModel(Model):
    name = "blind_deconvolution"

    def __init__(
        self,
        observations,
        kernel_prior: GaussianPrior,
        signal_prior: GaussianPrior | ConditionedPrior,
        noise_variance: float,
        mode: str = "truncated",
    ):
        d = np.asarray(observations, dtype=float).reshape(-1)
        if not noise_variance > 0:
            raise ModelError("noise variance must be positive")
        if isinstance(signal_prior, GaussianPrior):
            signal_prior = signal_prior.condition_on_exact([], [])
        if signal_prior.full_dim != d.size:
            raise ModelError(f"signal length {signal_prior.full_dim} != observation length {d.size}")
        if mode not in ("truncated", "circular"):
            raise ModelError(f"unknown convolution mode {mode!r}")
        self.observations = d
        self.n = d.size
        self.kw = kernel_prior.dim
        self.kernel_prior = kernel_prior
        self.signal = signal_prior
        self.noise_variance = float(noise_variance)
        self.mode = mode
        sp = signal_prior.prior
        self.prior = GaussianPrior(
            np.concatenate([kernel_prior.mean, sp.mean]),
            block_diag(kernel_prior.covariance, sp.covariance),
        )
        self._const = -0.5 * self.n * (LOG_2PI + np.log(self.noise_variance))

    def split(self, states):
        """(w, c) in full coordinates from sampler states."""
        states = np.asarray(states, dtype=float)
        w = states[..., : self.kw]
        c = self.signal.expand(states[..., self.kw :])
        return w, c

    def batch(self, states):
        states = np.asarray(states, dtype=float)
        if states.shape[-1] != self.prior.dim:
            raise ModelError(f"expected states of length {self.prior.dim}, got {states.shape[-1]}")
        w, c = self.split(states)
        r = self.observations - convolve(w, c, self.mode)
        return self._const - 0.5 * np.sum(r * r, axis=1) / self.noise_variance

    def full_state(self, x):
        w, c = self.split(x)
        return np.concatenate([w, c], axis=-1)

    def component_names(self):
        return [f"w{i}" for i in range(self.kw)] + [f"c{i}" for i in range(self.n)]

    def describe(self):
        return {
            "kind": self.name,
            "n": self.n,
            "kw": self.kw,
            "noise_variance": self.noise_variance,
            "mode": self.mode,
            "exact_indices": self.signal.fixed_indices.tolist(),
        }


def blind_deconvolution_loglik(model: BlindDeconvolutionModel, state) -> float:
    return model(state)


@dataclass
class BDDataset:
    model: BlindDeconvolutionModel
    w_true: np.ndarray
    c_true: np.ndarray
    config: BDConfig
    seed: int

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.seed,
            "w_true": self.w_true.tolist(),
            "c_true": self.c_true.tolist(),
            "observations": self.model.observations.tolist(),
        }


def simulate_bd_dataset(config: BDConfig = BDConfig(), seed: int = 0) -> BDDataset:
    """Draw w and c from their priors, blur and add noise, then pin c at the
    configured positions to its true values."""
    if not config.noise_variance > 0:
        raise ModelError("noise variance must be positive")
    rng = np.random.default_rng(seed)
    kernel_prior, signal_prior = bd_priors(config)
    w = kernel_prior.sample(rng)
    c = signal_prior.sample(rng)
    d = convolve(w, c, config.mode) + np.sqrt(config.noise_variance) * rng.standard_normal(config.n)
    idx = config.exact_indices()
    conditioned = signal_prior.condition_on_exact(idx, c[idx])
    model = BlindDeconvolutionModel(d, kernel_prior, conditioned, config.noise_variance, config.mode)
    return BDDataset(model, w, c, config, seed)
