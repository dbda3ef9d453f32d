"""Mixing diagnostics: effective sample size, MSJD and cost summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DiagnosticsError(ValueError):
    pass


def autocovariance(series) -> np.ndarray:
    """Biased autocovariance at lags 0..N-1, via FFT."""
    x = np.asarray(series, dtype=float)
    n = x.size
    x = x - x.mean()
    n_fft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, n_fft)
    return np.fft.irfft(f * np.conj(f), n_fft)[:n] / n


def effective_sample_size(series) -> float:
    """Effective sample size with the initial monotone positive-pairs truncation.

    Autocorrelations are summed in adjacent pairs until the first negative
    pair, with the pair sums forced to be nonincreasing.  The result is
    clamped to (0, N].
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    n = x.size
    if n < 10:
        raise DiagnosticsError(f"need at least 10 values, got {n}")
    acov = autocovariance(x)
    if not acov[0] > 0:
        raise DiagnosticsError("series has zero variance")
    rho = acov / acov[0]
    n_pairs = n // 2
    pairs = rho[: 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    negative = np.flatnonzero(pairs < 0)
    stop = negative[0] if negative.size else n_pairs
    pairs = np.minimum.accumulate(pairs[:stop])
    tau = -1.0 + 2.0 * float(np.sum(pairs))
    if tau <= 0:
        return float(n)
    return float(min(n, n / tau))


def msjd(chain) -> float:
    """Mean of ||x_{t+1} - x_t||^2 along the chain."""
    x = np.asarray(chain, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DiagnosticsError("need at least two states")
    return float(np.mean(np.sum(np.diff(x, axis=0) ** 2, axis=1)))


def monte_carlo_se(series) -> float:
    x = np.asarray(series, dtype=float)
    return float(np.std(x, ddof=1) / np.sqrt(effective_sample_size(x)))


@dataclass(frozen=True)
class ChainSummary:
    ess: np.ndarray
    msjd: float
    mean_shrink_iterations: float
    mean_likelihood_evaluations: float
    acceptance_rate: float | None
    n_samples: int
    n_steps: int

    @property
    def mean_ess(self) -> float:
        return float(np.mean(self.ess))


def summarize(result, burn_in: int = 0, components=None, acceptance: bool = False) -> ChainSummary:
    """Summary of a :class:`~mess.samplers.ChainResult` after dropping the
    first ``burn_in`` iterations.

    ``components`` restricts the effective sample sizes to those columns.
    """
    n_steps = result.shrink_iterations.shape[0]
    if not 0 <= burn_in < n_steps:
        raise DiagnosticsError(f"burn_in must lie in [0, {n_steps}), got {burn_in}")
    kept = result.kept_iterations
    samples = result.samples[kept > burn_in] if kept.size else result.samples
    if samples.shape[0] == 0:
        raise DiagnosticsError("no samples left after burn-in")
    cols = slice(None) if components is None else list(components)
    sel = samples[:, cols]
    ess = np.array([effective_sample_size(sel[:, j]) for j in range(sel.shape[1])])
    k = result.shrink_iterations[burn_in:]
    evals = result.likelihood_evaluations[burn_in:]
    return ChainSummary(
        ess=ess,
        msjd=msjd(samples) if samples.shape[0] > 1 else 0.0,
        mean_shrink_iterations=float(np.mean(k)),
        mean_likelihood_evaluations=float(np.mean(evals)),
        acceptance_rate=float(np.mean(result.accepted[burn_in:])) if acceptance else None,
        n_samples=int(samples.shape[0]),
        n_steps=int(k.size),
    )


def export_histogram(series, bins: int = 50):
    """Equal-width histogram over the data range: ``(counts, edges)``."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise DiagnosticsError("empty series")
    return np.histogram(x, bins=bins)
