"""Experiment configuration: JSON files with a schema version, resolved into
models, sampler specs and output locations.

A config looks like::

    {
      "schema_version": 1,
      "model": {"kind": "solute", "d": 20, "data_seed": 7},
      "sampler": {"kind": "mess", "M": 50, "distance": "angular"},
      "iterations": 30000,
      "seed": 1
    }

Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import copy
import dataclasses
import itertools
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import (
    BDConfig,
    PriorOnlyModel,
    SoluteDataset,
    SoluteHyper,
    generate_solute_datasets,
    make_conjugate_problem,
    make_gp_classification,
    simulate_bd_dataset,
)
from .samplers import SamplerSpec

SCHEMA_VERSION = 1

MODEL_KINDS = ("conjugate", "prior_only", "gp_classification", "blind_deconvolution", "solute")

_TOP_KEYS = {
    "schema_version", "name", "model", "sampler", "iterations", "thinning", "burn_in",
    "seed", "worker_count", "output_dir", "components", "grid", "generate", "tune",
}
_SAMPLER_KEYS = {
    "kind", "M", "distance", "max_shrink_iterations", "mh_scale", "mh_scale_file", "lp_method",
}
_MODEL_KEYS = {
    "conjugate": {"kind", "dim", "data_seed", "noise_variance"},
    "prior_only": {"kind", "dim", "data_seed"},
    "gp_classification": {"kind", "n_points", "data_seed", "separation", "amplitude", "lengthscale"},
    "blind_deconvolution": {"kind", "data_seed"} | {f.name for f in dataclasses.fields(BDConfig)},
    "solute": {"kind", "d", "data_seed", "dataset", "hyper"},
}


_MODEL_DEFAULTS = {
    "conjugate": {"dim": 10, "data_seed": 0, "noise_variance": 1.0},
    "prior_only": {"dim": 10, "data_seed": 0},
    "gp_classification": {"n_points": 200, "data_seed": 0, "separation": 1.0, "amplitude": 1.0, "lengthscale": 1.0},
    "blind_deconvolution": {"data_seed": 0, **dataclasses.asdict(BDConfig())},
    "solute": {"data_seed": 0},
}
_SAMPLER_DEFAULTS = {"kind": "mess", "M": 1, "distance": "uniform", "max_shrink_iterations": 1000,
                     "lp_method": "assignment"}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


def _require(cond, path, reason):
    if not cond:
        raise ConfigError(path, reason)


def _positive_int(value, path):
    _require(isinstance(value, int) and not isinstance(value, bool) and value > 0, path,
             f"must be a positive integer, got {value!r}")
    return value


def _check_keys(d: dict, allowed: set, path: str):
    _require(isinstance(d, dict), path, "must be an object")
    extra = sorted(set(d) - allowed)
    _require(not extra, f"{path}.{extra[0]}" if extra else path, "unknown field")


@dataclass
class ExperimentConfig:
    model: dict
    sampler: dict
    iterations: int = 1000
    thinning: int = 1
    burn_in: int | None = None
    seed: int = 0
    worker_count: int = 1
    output_dir: str = "out"
    name: str = "run"
    components: list | None = None
    grid: dict = field(default_factory=dict)
    generate: dict = field(default_factory=dict)
    tune: dict = field(default_factory=dict)
    base_dir: str = "."

    @property
    def effective_burn_in(self) -> int:
        """Explicit burn-in, or 10% of the chain."""
        return self.iterations // 10 if self.burn_in is None else self.burn_in

    def to_dict(self, execution: bool = True) -> dict:
        """Resolved config.  ``execution=False`` drops the fields that cannot
        change the samples (worker count, output location)."""
        d = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "model": self.model,
            "sampler": self.sampler,
            "iterations": self.iterations,
            "thinning": self.thinning,
            "burn_in": self.effective_burn_in,
            "seed": self.seed,
            "components": self.components,
        }
        if execution:
            d["worker_count"] = self.worker_count
            d["output_dir"] = self.output_dir
        if self.grid:
            d["grid"] = self.grid
        if self.generate:
            d["generate"] = self.generate
        if self.tune:
            d["tune"] = self.tune
        return d

    def resolve_path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p


def parse_config(raw: dict, base_dir=".") -> ExperimentConfig:
    _check_keys(raw, _TOP_KEYS, "config")
    _require(raw.get("schema_version") == SCHEMA_VERSION, "config.schema_version",
             f"must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    _require("seed" in raw, "config.seed", "is required")
    seed = raw["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
             "config.seed", f"must be a nonnegative integer, got {seed!r}")
    model = copy.deepcopy(raw.get("model", {}))
    sampler = copy.deepcopy(raw.get("sampler", {"kind": "mess"}))
    cfg = ExperimentConfig(
        model=model,
        sampler=sampler,
        iterations=_positive_int(raw.get("iterations", 1000), "config.iterations"),
        thinning=_positive_int(raw.get("thinning", 1), "config.thinning"),
        burn_in=raw.get("burn_in"),
        seed=seed,
        worker_count=_positive_int(raw.get("worker_count", 1), "config.worker_count"),
        output_dir=str(raw.get("output_dir", "out")),
        name=str(raw.get("name", "run")),
        components=raw.get("components"),
        grid=copy.deepcopy(raw.get("grid", {})),
        generate=copy.deepcopy(raw.get("generate", {})),
        tune=copy.deepcopy(raw.get("tune", {})),
        base_dir=str(base_dir),
    )
    if cfg.burn_in is not None:
        _require(isinstance(cfg.burn_in, int) and 0 <= cfg.burn_in < cfg.iterations,
                 "config.burn_in", f"must be an integer in [0, {cfg.iterations}), got {cfg.burn_in!r}")
    if cfg.components is not None:
        _require(isinstance(cfg.components, list) and cfg.components, "config.components",
                 "must be a nonempty list of component names")
    validate_model(cfg.model)
    validate_sampler(cfg.sampler)
    cfg.model = {**_MODEL_DEFAULTS[cfg.model["kind"]], **cfg.model}
    if cfg.model["kind"] == "solute" and "dataset" not in cfg.model:
        cfg.model["hyper"] = {**dataclasses.asdict(SoluteHyper()), **cfg.model.get("hyper", {})}
    cfg.sampler = {**_SAMPLER_DEFAULTS, **cfg.sampler}
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON ({exc})") from None
    return parse_config(raw, base_dir=path.parent)


def validate_model(model: dict):
    _require(isinstance(model, dict) and "kind" in model, "config.model.kind", "is required")
    kind = model["kind"]
    _require(kind in MODEL_KINDS, "config.model.kind", f"must be one of {list(MODEL_KINDS)}, got {kind!r}")
    _check_keys(model, _MODEL_KEYS[kind], "config.model")
    if kind == "solute":
        _require("d" in model, "config.model.d", "is required")
        _positive_int(model["d"], "config.model.d")
        if "hyper" in model:
            _check_keys(model["hyper"], {f.name for f in dataclasses.fields(SoluteHyper)}, "config.model.hyper")


def validate_sampler(sampler: dict):
    _check_keys(sampler, _SAMPLER_KEYS, "config.sampler")
    kind = sampler.get("kind", "mess")
    _require(kind in ("ess", "mess", "mh"), "config.sampler.kind", f"must be ess, mess or mh, got {kind!r}")
    if kind == "mh":
        _require("mh_scale" in sampler or "mh_scale_file" in sampler, "config.sampler.mh_scale",
                 "mh needs mh_scale or mh_scale_file")
    if "M" in sampler:
        _positive_int(sampler["M"], "config.sampler.M")
    if "distance" in sampler:
        _require(sampler["distance"] in ("uniform", "angular", "euclidean"), "config.sampler.distance",
                 f"must be uniform, angular or euclidean, got {sampler['distance']!r}")


# --- building ---------------------------------------------------------------


def solute_hyper(model: dict) -> SoluteHyper:
    return SoluteHyper(**model.get("hyper", {}))


def build_model(cfg: ExperimentConfig):
    m = cfg.model
    kind = m["kind"]
    data_seed = m.get("data_seed", 0)
    if kind == "conjugate":
        return make_conjugate_problem(m.get("dim", 10), data_seed, m.get("noise_variance", 1.0))
    if kind == "prior_only":
        return PriorOnlyModel(make_conjugate_problem(m.get("dim", 10), data_seed).prior)
    if kind == "gp_classification":
        return make_gp_classification(
            m.get("n_points", 200), data_seed, m.get("separation", 1.0),
            m.get("amplitude", 1.0), m.get("lengthscale", 1.0),
        )
    if kind == "blind_deconvolution":
        fields = {k: v for k, v in m.items() if k not in ("kind", "data_seed")}
        return simulate_bd_dataset(BDConfig(**fields), data_seed).model
    # solute
    d = m["d"]
    if "dataset" in m:
        path = cfg.resolve_path(m["dataset"])
        if not path.exists():
            raise ConfigError("config.model.dataset", f"dataset file {path} does not exist")
        ds = SoluteDataset.load(path)
        if ds.d != d:
            raise ConfigError("config.model.dataset", f"dataset has d={ds.d}, config asks for d={d}")
        return ds.model()
    return generate_solute_datasets([d], data_seed, solute_hyper(m))[d].model()


def mh_scale(cfg: ExperimentConfig) -> float | None:
    s = cfg.sampler
    if s.get("kind") != "mh":
        return None
    if "mh_scale" in s:
        value = s["mh_scale"]
    else:
        path = cfg.resolve_path(s["mh_scale_file"])
        try:
            record = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError("config.sampler.mh_scale_file", f"{path} does not exist") from None
        value = record.get("sigma")
    _require(isinstance(value, (int, float)) and value > 0, "config.sampler.mh_scale",
             f"must be a positive number, got {value!r}")
    return float(value)


def build_sampler(cfg: ExperimentConfig) -> SamplerSpec:
    s = cfg.sampler
    try:
        return SamplerSpec(
            kind=s.get("kind", "mess"),
            M=s.get("M", 1),
            distance=s.get("distance", "uniform"),
            max_shrink_iterations=s.get("max_shrink_iterations", 1000),
            worker_count=cfg.worker_count,
            mh_scale=mh_scale(cfg),
            lp_method=s.get("lp_method", "assignment"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("config.sampler", str(exc)) from None


# --- sweeps -------------------------------------------------------------------


def set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    node = d
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"config.grid.{key}", f"{p} is not an object")
    node[parts[-1]] = copy.deepcopy(value)


def cell_seed(master: int, cell: int) -> int:
    """64-bit seed for sweep cell ``cell``, a pure function of both inputs."""
    ss = np.random.SeedSequence(master, spawn_key=(cell,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def expand_grid(cfg: ExperimentConfig) -> list[tuple[dict, ExperimentConfig]]:
    """Cartesian product over ``grid``; each cell gets a derived seed.

    Grid keys are dotted paths into the config, e.g. ``"sampler.M"`` or
    ``"model.d"``; a plain ``"sampler"`` key replaces the whole sampler.
    """
    grid = cfg.grid
    _require(isinstance(grid, dict) and grid, "config.grid", "sweep needs a nonempty grid")
    keys = list(grid)
    for k in keys:
        _require(isinstance(grid[k], list) and grid[k], f"config.grid.{k}", "must be a nonempty list")
    base = cfg.to_dict()
    base.pop("grid")
    cells = []
    for index, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        raw = copy.deepcopy(base)
        raw.pop("burn_in")
        if cfg.burn_in is not None:
            raw["burn_in"] = cfg.burn_in
        for k, v in zip(keys, combo):
            set_dotted(raw, k, v)
        raw["seed"] = cell_seed(cfg.seed, index)
        cells.append((dict(zip(keys, combo)), parse_config(raw, cfg.base_dir)))
    return cells


# --- output -------------------------------------------------------------------


def atomic_write(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
