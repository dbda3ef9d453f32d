"""Toy solute-transport inverse problem: recover antisymmetric A from
noisy partial observations of the steady state (A + kappa I) theta = g.

The free parameters are the strict upper triangle of A stored column by
column, (0,1), (0,2), (1,2), (0,3), ...  With this order the parameters of
a leading d x d block are a prefix of those of any larger block.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..prior import GaussianPrior
from .base import Model, ModelError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SoluteHyper:
    kappa: float = 0.02
    alpha_decay: float = 3.0
    gamma: float = 2.0
    sigma2: float = 0.25
    tau2: float = 2.0
    d0: int = 6
    k_obs: int = 2

    def obs_indices(self) -> np.ndarray:
        return np.arange(self.d0 - self.k_obs, self.d0 + 1)


def n_params(d: int) -> int:
    return d * (d - 1) // 2


def upper_indices(d: int):
    """Row and column of each parameter, column by column."""
    rows, cols = [], []
    for j in range(1, d):
        rows.extend(range(j))
        cols.extend([j] * j)
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def unpack(params, d: int) -> np.ndarray:
    """Antisymmetric matrices from parameter vectors (..., d(d-1)/2)."""
    params = np.asarray(params, dtype=float)
    if params.shape[-1] != n_params(d):
        raise ModelError(f"expected {n_params(d)} parameters for d={d}, got {params.shape[-1]}")
    r, c = upper_indices(d)
    a = np.zeros(params.shape[:-1] + (d, d))
    a[..., r, c] = params
    a[..., c, r] = -params
    return a


def pack(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    r, c = upper_indices(a.shape[-1])
    return a[..., r, c]


def solute_solve(params, kappa: float, d: int, g=None) -> np.ndarray:
    """theta solving (A + kappa I) theta = g, for one or a stack of parameter vectors."""
    if not kappa > 0:
        raise ModelError("kappa must be positive")
    a = unpack(params, d)
    a[..., np.arange(d), np.arange(d)] = kappa
    if g is None:
        g = np.zeros(d)
        g[0] = 1.0
    rhs = np.broadcast_to(np.asarray(g, dtype=float)[:, None], a.shape[:-2] + (d, 1))
    try:
        return np.linalg.solve(a, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ModelError("singular transport system") from exc


def solute_variances(d: int, hyper: SoluteHyper = SoluteHyper()) -> np.ndarray:
    """tau2 * ((i+1)(j+1))^-alpha * |i-j|^-gamma for each parameter."""
    if d < 2:
        raise ModelError("d must be >= 2")
    r, c = upper_indices(d)
    return hyper.tau2 * ((r + 1.0) * (c + 1.0)) ** (-hyper.alpha_decay) * np.abs(r - c) ** (-hyper.gamma)


def solute_prior(d: int, hyper: SoluteHyper = SoluteHyper()) -> GaussianPrior:
    v = solute_variances(d, hyper)
    return GaussianPrior(np.zeros(v.size), np.diag(v))


class SoluteTransportModel(Model):
    name = "solute"

    def __init__(self, d: int, y, hyper: SoluteHyper = SoluteHyper()):
        obs = hyper.obs_indices()
        if d <= obs.max():
            raise ModelError(f"d={d} is too small for observation indices {obs.tolist()}")
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != obs.size:
            raise ModelError(f"expected {obs.size} observations, got {y.size}")
        self.d = d
        self.y = y
        self.hyper = hyper
        self.obs = obs
        self.prior = solute_prior(d, hyper)

    def theta(self, params):
        return solute_solve(params, self.hyper.kappa, self.d)

    def potential(self, states):
        r = self.y - self.theta(states)[..., self.obs]
        return 0.5 * np.sum(r * r, axis=-1) / self.hyper.sigma2

    def batch(self, states):
        return -self.potential(np.asarray(states, dtype=float))

    def component_names(self):
        r, c = upper_indices(self.d)
        return [f"a{i}_{j}" for i, j in zip(r, c)]

    def describe(self):
        return {"kind": self.name, "d": self.d, "dim": int(self.prior.dim), **asdict(self.hyper)}


def solute_loglik(model: SoluteTransportModel, params) -> float:
    return model(params)


def param_index(i: int, j: int) -> int:
    """Position of a_ij (i < j) in the parameter vector."""
    if not 0 <= i < j:
        raise ValueError("need 0 <= i < j")
    return j * (j - 1) // 2 + i


@dataclass
class SoluteDataset:
    d: int
    seed: int
    hyper: SoluteHyper
    params: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    noise: np.ndarray
    z: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def model(self) -> SoluteTransportModel:
        return SoluteTransportModel(self.d, self.y, self.hyper)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "solute_dataset",
            "d": self.d,
            "seed": self.seed,
            "hyperparameters": asdict(self.hyper),
            "obs_indices": self.hyper.obs_indices().tolist(),
            "params": self.params.tolist(),
            "theta": self.theta.tolist(),
            "y": self.y.tolist(),
            "noise": self.noise.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SoluteDataset":
        if data.get("kind") != "solute_dataset":
            raise ModelError("not a solute dataset")
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ModelError(f"unsupported dataset schema {data.get('schema_version')}")
        return cls(
            d=int(data["d"]),
            seed=int(data["seed"]),
            hyper=SoluteHyper(**data["hyperparameters"]),
            params=np.asarray(data["params"], dtype=float),
            theta=np.asarray(data["theta"], dtype=float),
            y=np.asarray(data["y"], dtype=float),
            noise=np.asarray(data["noise"], dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "SoluteDataset":
        return cls.from_dict(json.loads(Path(path).read_text()))


MAX_D = 100


def generate_solute_datasets(d_list, seed: int, hyper: SoluteHyper = SoluteHyper()):
    """Nested datasets sharing one draw of A_100 and of the noise.

    Each A_d is the leading d x d block of A_100; y_d observes theta(A_d)
    at the fixed observation indices plus the matching noise entries.
    """
    d_list = [int(d) for d in d_list]
    if not d_list:
        raise ModelError("d_list is empty")
    obs = hyper.obs_indices()
    for d in d_list:
        if d <= obs.max():
            raise ModelError(f"d={d} is too small: observation indices {obs.tolist()} need d >= {obs.max() + 1}")
        if d > MAX_D:
            raise ModelError(f"d={d} exceeds the maximum {MAX_D}")
    rng = np.random.default_rng(seed)
    params100 = np.sqrt(solute_variances(MAX_D, hyper)) * rng.standard_normal(n_params(MAX_D))
    z = rng.standard_normal(MAX_D)
    noise = np.sqrt(hyper.sigma2) * rng.standard_normal(MAX_D)
    out = {}
    for d in d_list:
        params = params100[: n_params(d)].copy()
        theta = solute_solve(params, hyper.kappa, d)
        y = theta[obs] + noise[obs]
        out[d] = SoluteDataset(d, seed, hyper, params, theta, y, noise[obs].copy(), z[:d].copy())
    return out
