"""Elliptical slice, multiproposal elliptical slice and prior-preconditioned MH.

Per step the random stream is consumed in a fixed order: the slice uniform,
the anchor angle, the prior draw, then M angle uniforms per shrink
iteration, and finally one uniform for the row draw when the anchor row has
more than one nonzero entry.  Likelihood values never influence how many
numbers are drawn before they are needed, so evaluating proposals on a
thread pool cannot change the output.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ellipse import (
    AngleBracket,
    draw_anchor,
    draw_angles,
    shrink,
    sort_with_anchor,
    valid_set,
)
from .prior import GaussianPrior
from .transition import Distance, build_matrix, sample_row


class SamplerError(RuntimeError):
    pass


class ShrinkLimitError(SamplerError):
    pass


class TuningError(SamplerError):
    def __init__(self, message, sigma=None, rate=None):
        super().__init__(message)
        self.sigma = sigma
        self.rate = rate


class ChainError(SamplerError):
    """A step failed; ``partial`` holds everything produced before it."""

    def __init__(self, iteration: int, cause: Exception, partial=None):
        super().__init__(f"step failed at iteration {iteration}: {cause}")
        self.iteration = iteration
        self.partial = partial


@dataclass(frozen=True)
class ChainState:
    x: np.ndarray
    log_likelihood: float

    @classmethod
    def start(cls, x, loglik) -> "ChainState":
        x = np.asarray(x, dtype=float)
        return cls(x, float(loglik(x)))


@dataclass(frozen=True)
class StepStats:
    shrink_iterations: int
    likelihood_evaluations: int
    accepted_angle: float
    squared_jump: float
    accepted: bool = True


@dataclass(frozen=True)
class MessConfig:
    M: int = 1
    distance: Distance = Distance.UNIFORM
    max_shrink_iterations: int = 1000
    worker_count: int = 1
    lp_method: str = "assignment"

    def __post_init__(self):
        object.__setattr__(self, "distance", Distance(self.distance))
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.max_shrink_iterations < 1:
            raise ValueError("max_shrink_iterations must be >= 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


def evaluate(loglik, states: np.ndarray, executor: Executor | None = None, workers: int = 1):
    """Log-likelihoods of the rows of ``states``, in row order.

    A ``loglik`` with a ``batch`` method is called on contiguous chunks of
    rows; batch implementations must treat rows independently so that the
    chunking never changes a value.
    """
    fn = getattr(loglik, "batch", None)
    if fn is None:
        def fn(chunk):
            return np.array([float(loglik(row)) for row in chunk])

    if executor is None or workers <= 1 or states.shape[0] <= 1:
        return np.asarray(fn(states), dtype=float)
    chunks = np.array_split(states, min(workers, states.shape[0]))
    return np.concatenate([np.asarray(v, dtype=float) for v in executor.map(fn, chunks)])


def _propose(x, nu, mean, deltas):
    dx = x - mean
    dnu = nu - mean
    return np.cos(deltas)[:, None] * dx + np.sin(deltas)[:, None] * dnu + mean


def _slice_setup(state: ChainState, prior: GaussianPrior, rng):
    if not np.isfinite(state.log_likelihood):
        raise SamplerError(f"current state has log-likelihood {state.log_likelihood}")
    u = 1.0 - rng.random()
    log_y = state.log_likelihood + math.log(u)
    anchor = draw_anchor(rng)
    nu = prior.sample(rng)
    return log_y, anchor, nu


def ess_step(state: ChainState, prior: GaussianPrior, loglik, rng, max_shrink_iterations=1000):
    """One elliptical slice update with a randomly placed initial bracket."""
    log_y, anchor, nu = _slice_setup(state, prior, rng)
    bracket = AngleBracket.full(anchor)
    for k in range(1, max_shrink_iterations + 1):
        phi = draw_angles(bracket, 1, rng)
        proposal = _propose(state.x, nu, prior.mean, phi - anchor)
        ll = evaluate(loglik, proposal)
        if valid_set(ll, log_y).size:
            x_new = proposal[0]
            stats = StepStats(k, k, float(phi[0]), float(np.sum((x_new - state.x) ** 2)))
            return ChainState(x_new, float(ll[0])), stats
        bracket = shrink(bracket, phi)
    raise ShrinkLimitError(f"no proposal accepted after {max_shrink_iterations} shrink iterations")


def mess_step(
    state: ChainState,
    prior: GaussianPrior,
    loglik,
    config: MessConfig,
    rng,
    executor: Executor | None = None,
):
    """One multiproposal elliptical slice update.

    Each shrink iteration proposes ``config.M`` angles in the current
    bracket.  If none lands on the slice the bracket shrinks around the
    anchor; otherwise the anchor and the valid angles are sorted and the
    next state is drawn from the anchor's row of the transition matrix.
    """
    M = config.M
    log_y, anchor, nu = _slice_setup(state, prior, rng)
    bracket = AngleBracket.full(anchor)
    for k in range(1, config.max_shrink_iterations + 1):
        phi = draw_angles(bracket, M, rng)
        proposals = _propose(state.x, nu, prior.mean, phi - anchor)
        ll = evaluate(loglik, proposals, executor, config.worker_count)
        valid = valid_set(ll, log_y)
        if valid.size == 0:
            bracket = shrink(bracket, phi)
            continue
        cands = sort_with_anchor(anchor, phi[valid], labels=valid)
        states = None
        if config.distance is Distance.EUCLIDEAN:
            states = np.empty((cands.size, state.x.shape[0]))
            for pos, label in enumerate(cands.labels):
                states[pos] = state.x if label < 0 else proposals[label]
        matrix = build_matrix(config.distance, cands.angles, states, config.lp_method)
        m = cands.label_at(sample_row(matrix, cands.anchor_position, rng))
        x_new = proposals[m]
        stats = StepStats(k, k * M, float(phi[m]), float(np.sum((x_new - state.x) ** 2)))
        return ChainState(x_new, float(ll[m])), stats
    raise ShrinkLimitError(f"no proposal accepted after {config.max_shrink_iterations} shrink iterations")


def mh_step(state: ChainState, prior: GaussianPrior, loglik, scale: float, rng):
    """Random-walk Metropolis with proposal N(x, scale^2 * prior covariance).

    Returns ``(state, stats, accepted)``.
    """
    if not scale > 0:
        raise ValueError("proposal scale must be positive")
    z = rng.standard_normal(prior.dim)
    proposal = state.x + scale * prior.scaled_draw(z)
    log_u = math.log(1.0 - rng.random())
    ll = float(loglik(proposal))
    if math.isnan(ll) or ll == math.inf:
        raise SamplerError(f"log-likelihood is {ll}")
    log_ratio = ll + prior.log_density(proposal) - state.log_likelihood - prior.log_density(state.x)
    if log_u < log_ratio:
        stats = StepStats(1, 1, 0.0, float(np.sum((proposal - state.x) ** 2)), True)
        return ChainState(proposal, ll), stats, True
    return state, StepStats(1, 1, 0.0, 0.0, False), False


def mh_acceptance_rate(prior, loglik, scale, n_steps, rng, x0=None) -> float:
    x0 = prior.sample(rng) if x0 is None else x0
    state = ChainState.start(x0, loglik)
    accepted = 0
    for _ in range(n_steps):
        state, _, ok = mh_step(state, prior, loglik, scale, rng)
        accepted += ok
    return accepted / n_steps


def pilot_acceptance_rate(prior, loglik, scale, n_steps, seed: int, starts) -> float:
    """Pooled acceptance rate of one pilot chain per row of ``starts``.

    Chain k uses the stream ``default_rng([seed, k])``.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    rates = [
        mh_acceptance_rate(prior, loglik, scale, n_steps, np.random.default_rng([seed, k]), x)
        for k, x in enumerate(starts)
    ]
    return float(np.mean(rates))


@dataclass(frozen=True)
class TuneResult:
    sigma: float
    rate: float
    rounds: int
    verification_rate: float = math.nan
    n_starts: int = 1


def tune_mh(
    prior,
    loglik,
    target_rate: float,
    pilot_length: int,
    rng,
    x0=None,
    tol: float = 0.01,
    max_rounds: int = 30,
    bounds=(1e-8, 1e4),
) -> TuneResult:
    """Bisect on log(scale) until the pilot acceptance rate is within ``tol``.

    ``x0`` is one starting point or a (K, dim) array of them; the pilot
    then runs one chain per start and pools the rates.  Every pilot reuses
    the same random streams and starting points, so the rate is a (nearly)
    monotone function of the scale.
    """
    if not 0 < target_rate < 1:
        raise ValueError(f"target rate must lie in (0, 1), got {target_rate}")
    starts = prior.sample(rng)[None, :] if x0 is None else np.atleast_2d(np.asarray(x0, dtype=float))
    seed = int(rng.integers(2**63))

    def rate(sigma):
        return pilot_acceptance_rate(prior, loglik, sigma, pilot_length, seed, starts)

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    r_lo, r_hi = rate(bounds[0]), rate(bounds[1])
    best = min([(bounds[0], r_lo), (bounds[1], r_hi)], key=lambda p: abs(p[1] - target_rate))
    if not r_lo >= target_rate >= r_hi:
        raise TuningError(
            f"target {target_rate} not bracketed; closest rate {best[1]:.4f} at scale {best[0]:.3g}",
            *best,
        )
    for rounds in range(1, max_rounds + 1):
        mid = 0.5 * (lo + hi)
        sigma = math.exp(mid)
        r = rate(sigma)
        if abs(r - target_rate) < abs(best[1] - target_rate):
            best = (sigma, r)
        if abs(r - target_rate) <= tol:
            return TuneResult(sigma, r, rounds, n_starts=starts.shape[0])
        if r > target_rate:
            lo = mid
        else:
            hi = mid
    raise TuningError(
        f"no scale within {tol} of {target_rate} after {max_rounds} rounds; "
        f"closest rate {best[1]:.4f} at scale {best[0]:.3g}",
        *best,
    )


def posterior_starts(model, n_starts: int, warmup: int, spacing: int, seed: int, M: int = 20) -> np.ndarray:
    """Sampler-space states of a MESS chain after ``warmup`` steps, every
    ``spacing`` steps."""
    if n_starts < 1 or warmup < 0 or spacing < 1:
        raise ValueError("need n_starts >= 1, warmup >= 0 and spacing >= 1")
    spec = SamplerSpec("mess", M=M)
    seeds = np.random.SeedSequence(seed).generate_state(n_starts + 1, np.uint64)
    x = run_chain(spec, model, warmup, int(seeds[0])).final_state.x if warmup else None
    starts = []
    for k in range(n_starts):
        x = run_chain(spec, model, spacing, int(seeds[k + 1]), x0=x).final_state.x
        starts.append(x)
    return np.array(starts)


def tune_mh_posterior(
    model,
    target_rate: float,
    rng,
    n_starts: int = 64,
    pilot_length: int = 1000,
    warmup: int = 2000,
    spacing: int = 100,
    warmup_M: int = 20,
    tol: float = 0.01,
) -> TuneResult:
    """Tune the MH scale with pilots started from MESS draws of the posterior,
    then re-measure the rate on fresh streams from the same starts.

    Short pilots from many dispersed starts estimate the stationary rate far
    better than one long pilot when the random walk mixes slowly.
    """
    starts = posterior_starts(model, n_starts, warmup, spacing, int(rng.integers(2**63)), warmup_M)
    res = tune_mh(model.prior, model, target_rate, pilot_length, rng, x0=starts, tol=tol)
    check = pilot_acceptance_rate(model.prior, model, res.sigma, pilot_length, int(rng.integers(2**63)), starts)
    return replace(res, verification_rate=check)


# --- chains ---------------------------------------------------------------


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "mess"
    M: int = 1
    distance: str = "uniform"
    max_shrink_iterations: int = 1000
    worker_count: int = 1
    mh_scale: float | None = None
    lp_method: str = "assignment"

    def __post_init__(self):
        if self.kind not in ("ess", "mess", "mh"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "mh" and not (self.mh_scale and self.mh_scale > 0):
            raise ValueError("mh sampler needs a positive mh_scale")
        self.mess_config()  # validates the shared fields

    def mess_config(self) -> MessConfig:
        return MessConfig(
            self.M if self.kind == "mess" else 1,
            self.distance,
            self.max_shrink_iterations,
            self.worker_count,
            self.lp_method,
        )

    def with_workers(self, n: int) -> "SamplerSpec":
        return replace(self, worker_count=n)


@dataclass
class ChainResult:
    samples: np.ndarray
    shrink_iterations: np.ndarray
    likelihood_evaluations: np.ndarray
    accepted_angle: np.ndarray
    squared_jump: np.ndarray
    accepted: np.ndarray
    wall_seconds: float = 0.0
    final_state: ChainState | None = None
    kept_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_steps(self) -> int:
        return self.shrink_iterations.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if self.n_steps else float("nan")


def run_chain(spec: SamplerSpec, model, iterations: int, seed: int, thinning: int = 1, x0=None):
    """Run one chain and return thinned samples plus per-step statistics.

    ``model`` provides ``prior``, is callable as a log-likelihood, and may
    offer ``batch`` and ``full_state``.  Samples are stored in the model's
    full coordinates.  Output depends only on (spec without worker_count,
    model, iterations, seed, thinning).
    """
    if iterations < 1 or thinning < 1:
        raise ValueError("iterations and thinning must be >= 1")
    rng = np.random.default_rng(seed)
    prior = model.prior
    full = getattr(model, "full_state", None) or (lambda v: v)
    state = ChainState.start(prior.sample(rng) if x0 is None else x0, model)
    n_kept = iterations // thinning
    first = np.asarray(full(state.x))
    samples = np.empty((n_kept, first.shape[0]))
    kept = np.empty(n_kept, dtype=int)
    k_arr = np.zeros(iterations, dtype=int)
    ev_arr = np.zeros(iterations, dtype=int)
    ang_arr = np.zeros(iterations)
    jump_arr = np.zeros(iterations)
    acc_arr = np.zeros(iterations, dtype=bool)
    config = spec.mess_config()
    executor = ThreadPoolExecutor(spec.worker_count) if spec.worker_count > 1 else None

    def result(n_done, n_samples, wall):
        return ChainResult(
            samples[:n_samples].copy(),
            k_arr[:n_done].copy(),
            ev_arr[:n_done].copy(),
            ang_arr[:n_done].copy(),
            jump_arr[:n_done].copy(),
            acc_arr[:n_done].copy(),
            wall,
            state,
            kept[:n_samples].copy(),
        )

    t0 = time.perf_counter()
    j = 0
    try:
        for t in range(iterations):
            try:
                if spec.kind == "mess":
                    state, st = mess_step(state, prior, model, config, rng, executor)
                elif spec.kind == "ess":
                    state, st = ess_step(state, prior, model, rng, spec.max_shrink_iterations)
                else:
                    state, st, _ = mh_step(state, prior, model, spec.mh_scale, rng)
            except Exception as exc:
                raise ChainError(t, exc, result(t, j, time.perf_counter() - t0)) from exc
            k_arr[t] = st.shrink_iterations
            ev_arr[t] = st.likelihood_evaluations
            ang_arr[t] = st.accepted_angle
            jump_arr[t] = st.squared_jump
            acc_arr[t] = st.accepted
            if (t + 1) % thinning == 0:
                samples[j] = full(state.x)
                kept[j] = t + 1
                j += 1
    finally:
        if executor is not None:
            executor.shutdown()
    return result(iterations, j, time.perf_counter() - t0)
