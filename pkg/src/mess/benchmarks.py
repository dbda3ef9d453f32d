"""Experiment drivers shared by the scripts and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cli import execute
from .diagnostics import effective_sample_size, summarize
from .experiment import SCHEMA_VERSION, ExperimentConfig, parse_config
from .models import (
    BDConfig,
    PriorOnlyModel,
    SoluteHyper,
    conjugate_posterior,
    generate_solute_datasets,
    make_conjugate_problem,
    make_gp_classification,
    simulate_bd_dataset,
)
from .samplers import SamplerSpec, TuneResult, run_chain, tune_mh_posterior


@dataclass
class MomentCheck:
    """Sample moments against reference values, per component."""

    mean: np.ndarray
    variance: np.ndarray
    ref_mean: np.ndarray
    ref_variance: np.ndarray
    mcse: np.ndarray
    variance_se: np.ndarray

    @property
    def mean_z(self) -> np.ndarray:
        return np.abs(self.mean - self.ref_mean) / self.mcse

    @property
    def variance_rel_error(self) -> np.ndarray:
        return np.abs(self.variance / self.ref_variance - 1.0)

    @property
    def variance_z(self) -> np.ndarray:
        return np.abs(self.variance - self.ref_variance) / self.variance_se


def moment_check(samples, ref_mean, ref_variance) -> MomentCheck:
    """Means and variances with Monte Carlo standard errors.

    The standard error of the variance uses the effective sample size of
    the squared centred series.
    """
    x = np.asarray(samples, dtype=float)
    mean = x.mean(axis=0)
    var = x.var(axis=0, ddof=1)
    mcse = np.empty(x.shape[1])
    vse = np.empty(x.shape[1])
    for j in range(x.shape[1]):
        mcse[j] = math.sqrt(var[j] / effective_sample_size(x[:, j]))
        sq = (x[:, j] - mean[j]) ** 2
        vse[j] = math.sqrt(sq.var(ddof=1) / effective_sample_size(sq))
    return MomentCheck(mean, var, np.asarray(ref_mean), np.asarray(ref_variance), mcse, vse)


# --- config-driven runs ---------------------------------------------------------


@dataclass
class ExperimentRun:
    """One chain run through the CLI path, with its files read back."""

    config: ExperimentConfig
    samples_path: Path
    iterations: np.ndarray
    samples: np.ndarray
    summary: list

    def kept(self) -> np.ndarray:
        """Samples recorded after burn-in."""
        return self.samples[self.iterations > self.config.effective_burn_in]

    def ess(self) -> np.ndarray:
        return np.array([float(r["ess"]) for r in self.summary])


def run_experiment(raw: dict, out, stem: str = "run", workers: int = 1) -> ExperimentRun:
    """Parse ``raw`` as a config, run it and load the written samples file."""
    cfg = parse_config({**raw, "worker_count": workers})
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = execute(cfg, out, stem)
    path = out / f"{stem}_samples.csv"
    table = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return ExperimentRun(cfg, path, table[:, 0].astype(int), table[:, 1:], rows)


# --- conjugate and prior recovery ---------------------------------------------


def conjugate_config(M, distance, iterations=100_000, seed=0, dim=10, data_seed=0) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": f"conjugate_M{M}_{distance}",
        "model": {"kind": "conjugate", "dim": dim, "data_seed": data_seed},
        "sampler": {"kind": "mess", "M": M, "distance": distance},
        "iterations": iterations,
        "seed": seed,
    }


def conjugate_run(M, distance, out, iterations=100_000, seed=0, dim=10, data_seed=0, workers=1):
    """Run MESS on the conjugate model; return (ExperimentRun, MomentCheck)."""
    raw = conjugate_config(M, distance, iterations, seed, dim, data_seed)
    run = run_experiment(raw, out, raw["name"], workers)
    mean, cov = conjugate_posterior(make_conjugate_problem(dim, data_seed))
    return run, moment_check(run.kept(), mean, np.diag(cov))


def prior_recovery_run(M, distance, iterations=100_000, seed=0, dim=5, data_seed=0):
    """MESS with a constant likelihood; the chain should reproduce the prior."""
    prior = make_conjugate_problem(dim, data_seed).prior
    model = PriorOnlyModel(prior)
    r = run_chain(SamplerSpec("mess", M=M, distance=distance), model, iterations, seed)
    return r, moment_check(r.samples, prior.mean, np.diag(prior.covariance))


# --- GP classification shrink sweep ----------------------------------------------


@dataclass
class ShrinkSweep:
    M: list
    mean_shrink: list
    mean_evaluations: list


def gp_shrink_sweep(Ms=(1, 2, 4, 8, 16), iterations=5000, seed=0, n_points=200, data_seed=0,
                    distance="angular", burn_in=None) -> ShrinkSweep:
    model = make_gp_classification(n_points, data_seed)
    b = iterations // 10 if burn_in is None else burn_in
    ks, evs = [], []
    for i, M in enumerate(Ms):
        r = run_chain(SamplerSpec("mess", M=M, distance=distance), model, iterations, seed + i)
        s = summarize(r, b, components=[0])
        ks.append(s.mean_shrink_iterations)
        evs.append(s.mean_likelihood_evaluations)
    return ShrinkSweep(list(Ms), ks, evs)


# --- blind deconvolution sign switching ----------------------------------------------


@dataclass
class SignFlips:
    seed: int
    flips: int
    positive_fraction: float
    overlap: np.ndarray = field(repr=False)


def bd_sign_flips(seed, iterations=50_000, config: BDConfig = BDConfig(), M=20, distance="angular",
                  burn_in=None, chain_seed=None) -> SignFlips:
    """Count sign changes of <w, w_true> along a MESS chain after burn-in."""
    ds = simulate_bd_dataset(config, seed)
    cs = 1000 + seed if chain_seed is None else chain_seed
    r = run_chain(SamplerSpec("mess", M=M, distance=distance), ds.model, iterations, cs)
    b = iterations // 10 if burn_in is None else burn_in
    w = r.samples[b:, : config.kw]
    overlap = w @ ds.w_true / float(ds.w_true @ ds.w_true)
    s = np.sign(overlap)
    return SignFlips(seed, int(np.sum(s[1:] != s[:-1])), float(np.mean(s > 0)), overlap)


# --- solute transport dimension study ------------------------------------------------


SOLUTE_COMPONENTS = ((0, 1), (0, 2))


@dataclass
class SoluteStudy:
    dims: list
    tuning: TuneResult
    runs: dict = field(repr=False)  # (sampler label, d) -> ExperimentRun

    @property
    def sigma_mh(self) -> float:
        return self.tuning.sigma

    def ess(self, label, d) -> np.ndarray:
        return self.runs[label, d].ess()

    def mean_shrink(self, label, d) -> float:
        return float(self.runs[label, d].summary[0]["mean_shrink_iters"])

    def mh_acceptance(self, d) -> float:
        return float(self.runs["mh", d].summary[0]["acceptance_rate"])


def tune_solute_mh(d=20, data_seed=0, seed=0, target=0.234, hyper=SoluteHyper(), **kwargs) -> TuneResult:
    """Tune the MH scale on the d-dimensional posterior from MESS starting points."""
    model = generate_solute_datasets([d], data_seed, hyper)[d].model()
    return tune_mh_posterior(model, target, np.random.default_rng(seed), **kwargs)


def solute_samplers(sigma_mh, M_big=50, distance="uniform") -> dict:
    return {
        "mess1": {"kind": "mess", "M": 1},
        f"mess{M_big}": {"kind": "mess", "M": M_big, "distance": distance},
        "mh": {"kind": "mh", "mh_scale": sigma_mh},
    }


def solute_config(d, sampler: dict, label, iterations=30_000, seed=0, data_seed=0) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": f"solute_d{d}_{label}",
        "model": {"kind": "solute", "d": d, "data_seed": data_seed},
        "sampler": sampler,
        "iterations": iterations,
        "seed": seed,
        "components": [f"a{i}_{j}" for i, j in SOLUTE_COMPONENTS],
    }


def solute_dimension_study(out, dims=(10, 20, 30), iterations=30_000, seed=0, data_seed=0, M_big=50,
                           distance="uniform", tune_d=20, workers=1, sigma_mh=None) -> SoluteStudy:
    """Effective sample sizes of a0_1 and a0_2 for MESS(M=1), MESS(M_big) and
    an MH sampler tuned once at ``tune_d``."""
    tuning = tune_solute_mh(tune_d, data_seed, seed) if sigma_mh is None else TuneResult(sigma_mh, math.nan, 0)
    runs = {}
    for d in dims:
        for i, (label, sampler) in enumerate(solute_samplers(tuning.sigma, M_big, distance).items()):
            raw = solute_config(d, sampler, label, iterations, seed * 1000 + d * 10 + i, data_seed)
            runs[label, d] = run_experiment(raw, out, raw["name"], workers)
    return SoluteStudy(list(dims), tuning, runs)
