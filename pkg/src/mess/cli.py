"""Benchmark command line: generate, run, sweep, tune-mh and report.

Exit codes: 0 on success, 1 for configuration errors, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsError, summarize
from .experiment import (
    ConfigError,
    ExperimentConfig,
    atomic_write,
    build_model,
    build_sampler,
    expand_grid,
    load_config,
    solute_hyper,
)
from .models import ModelError, generate_solute_datasets
from .samplers import (
    ChainError,
    SamplerError,
    SamplerSpec,
    TuningError,
    run_chain,
    tune_mh_posterior,
)

log = logging.getLogger("mess")

SUMMARY_COLUMNS = [
    "model", "sampler", "M", "distance", "d", "seed", "component", "ess", "msjd",
    "mean_shrink_iters", "mean_lik_evals", "wall_seconds", "acceptance_rate",
]


class RuntimeFailure(RuntimeError):
    pass


def _config_line(d: dict) -> str:
    return "# config: " + json.dumps(d, sort_keys=True) + "\n"


def samples_csv(cfg: ExperimentConfig, names, result) -> str:
    buf = io.StringIO()
    buf.write(_config_line(cfg.to_dict(execution=False)))
    buf.write(",".join(["iteration", *names]) + "\n")
    if result.samples.shape[0]:
        table = np.column_stack([result.kept_iterations, result.samples])
        np.savetxt(buf, table, delimiter=",", fmt=["%d"] + ["%.17g"] * len(names))
    return buf.getvalue()


def model_dimension(model) -> int:
    return int(model.describe().get("d", model.prior.dim))


def summary_rows(cfg: ExperimentConfig, spec: SamplerSpec, model, names, result) -> list[dict]:
    comps = cfg.components or names
    missing = [c for c in comps if c not in names]
    if missing:
        raise ConfigError("config.components", f"unknown component {missing[0]!r}")
    idx = [names.index(c) for c in comps]
    burn = min(cfg.effective_burn_in, max(result.n_steps - 1, 0))
    s = summarize(result, burn, idx, acceptance=spec.kind == "mh")
    rows = []
    for c, e in zip(comps, s.ess):
        rows.append({
            "model": model.name,
            "sampler": spec.kind,
            "M": spec.M if spec.kind == "mess" else 1,
            "distance": spec.distance if spec.kind == "mess" else "none",
            "d": model_dimension(model),
            "seed": cfg.seed,
            "component": c,
            "ess": repr(float(e)),
            "msjd": repr(s.msjd),
            "mean_shrink_iters": repr(s.mean_shrink_iterations),
            "mean_lik_evals": repr(s.mean_likelihood_evaluations),
            "wall_seconds": f"{result.wall_seconds:.3f}",
            "acceptance_rate": "" if s.acceptance_rate is None else repr(s.acceptance_rate),
        })
    return rows


def rows_csv(config: dict, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(_config_line(config))
    w = csv.DictWriter(buf, SUMMARY_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def read_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --- commands ---------------------------------------------------------------


def execute(cfg: ExperimentConfig, out: Path, stem: str = "run"):
    """Run one chain, write ``<stem>_samples.csv`` and ``<stem>_summary.csv``.

    Returns the summary rows.  On a failed step, whatever was produced is
    written before the error propagates.
    """
    model = build_model(cfg)
    spec = build_sampler(cfg)
    names = list(model.component_names())
    samples_path = out / f"{stem}_samples.csv"
    summary_path = out / f"{stem}_summary.csv"
    try:
        result = run_chain(spec, model, cfg.iterations, cfg.seed, cfg.thinning)
    except ChainError as exc:
        partial = exc.partial
        if partial is not None:
            atomic_write(samples_path, samples_csv(cfg, names, partial))
            try:
                rows = summary_rows(cfg, spec, model, names, partial)
                atomic_write(summary_path, rows_csv(cfg.to_dict(), rows))
            except (DiagnosticsError, ConfigError):
                pass
        raise RuntimeFailure(f"{exc}; partial output flushed to {out}") from exc
    atomic_write(samples_path, samples_csv(cfg, names, result))
    rows = summary_rows(cfg, spec, model, names, result)
    atomic_write(summary_path, rows_csv(cfg.to_dict(), rows))
    return rows


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    rows = execute(cfg, out, cfg.name)
    for r in rows:
        log.info("%s %s M=%s d=%s %s ess=%.1f k=%.3f", r["model"], r["sampler"], r["M"], r["d"],
                 r["component"], float(r["ess"]), float(r["mean_shrink_iters"]))
    print(out / f"{cfg.name}_summary.csv")
    return 0


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> int:
    cells = expand_grid(cfg)
    all_rows, failures = [], []
    for index, (coords, cell) in enumerate(cells):
        stem = f"{cfg.name}_cell{index:03d}"
        label = ", ".join(f"{k}={v}" for k, v in coords.items())
        try:
            rows = execute(cell, out, stem)
        except (RuntimeFailure, ConfigError, ModelError, DiagnosticsError, SamplerError) as exc:
            log.error("cell %d (%s) failed: %s", index, label, exc)
            failures.append({"cell": index, "coordinates": coords, "error": str(exc)})
            continue
        log.info("cell %d (%s) done", index, label)
        all_rows.extend(rows)
    atomic_write(out / f"{cfg.name}_sweep.csv", rows_csv(cfg.to_dict(), all_rows))
    if failures:
        atomic_write(out / f"{cfg.name}_failures.json", json.dumps(failures, indent=1, default=str) + "\n")
    print(out / f"{cfg.name}_sweep.csv")
    return 2 if failures and not all_rows else 0


def cmd_generate(cfg: ExperimentConfig, out: Path) -> int:
    if cfg.model.get("kind") != "solute":
        raise ConfigError("config.model.kind", "generate only supports the solute model")
    d_list = cfg.generate.get("d_list", [cfg.model["d"]])
    if not isinstance(d_list, list) or not d_list:
        raise ConfigError("config.generate.d_list", "must be a nonempty list")
    try:
        datasets = generate_solute_datasets(d_list, cfg.model.get("data_seed", 0), solute_hyper(cfg.model))
    except ModelError as exc:
        raise ConfigError("config.generate.d_list", str(exc)) from None
    for d, ds in datasets.items():
        payload = ds.to_dict()
        payload["config"] = cfg.to_dict(execution=False)
        path = out / f"solute_d{d}.json"
        atomic_write(path, json.dumps(payload, indent=1) + "\n")
        print(path)
    return 0


def cmd_tune_mh(cfg: ExperimentConfig, out: Path) -> int:
    t = cfg.tune
    target = t.get("target_rate", 0.234)
    if not isinstance(target, (int, float)) or not 0 < target < 1:
        raise ConfigError("config.tune.target_rate", f"must lie in (0, 1), got {target!r}")
    counts = {
        "pilot_length": (t.get("pilot_length", 1000), 1),
        "n_starts": (t.get("n_starts", 64), 1),
        "warmup_iterations": (t.get("warmup_iterations", 2000), 0),
        "spacing": (t.get("spacing", 100), 1),
        "warmup_M": (t.get("warmup_M", 20), 1),
    }
    for key, (value, low) in counts.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < low:
            raise ConfigError(f"config.tune.{key}", f"must be an integer >= {low}, got {value!r}")
    model = build_model(cfg)
    rng = np.random.default_rng(cfg.seed)
    try:
        res = tune_mh_posterior(
            model, float(target), rng,
            n_starts=counts["n_starts"][0],
            pilot_length=counts["pilot_length"][0],
            warmup=counts["warmup_iterations"][0],
            spacing=counts["spacing"][0],
            warmup_M=counts["warmup_M"][0],
            tol=t.get("tolerance", 0.01),
        )
    except TuningError as exc:
        raise RuntimeFailure(str(exc)) from exc
    check = res.verification_rate
    record = {
        "schema_version": 1,
        "kind": "mh_scale",
        "sigma": res.sigma,
        "tuning_rate": res.rate,
        "verification_rate": check,
        "rounds": res.rounds,
        "n_starts": res.n_starts,
        "target_rate": target,
        "d": model_dimension(model),
        "config": cfg.to_dict(),
    }
    path = out / t.get("output", "mh_scale.json")
    atomic_write(path, json.dumps(record, indent=1) + "\n")
    print(f"sigma={res.sigma:.6g} rate={res.rate:.4f} verification={check:.4f} -> {path}")
    return 0


def cmd_report(paths, out: Path) -> int:
    if not paths:
        raise ConfigError("report", "no summary CSV given")
    groups = defaultdict(list)
    for p in paths:
        if not Path(p).exists():
            raise ConfigError(str(p), "file not found")
        for r in read_summary(p):
            groups[(r["model"], r["sampler"], r["M"], r["distance"], r["d"])].append(r)
    if not groups:
        raise ConfigError("report", "summary files contain no rows")
    fields = ["model", "sampler", "M", "distance", "d", "rows", "mean_ess", "msjd",
              "mean_shrink_iters", "mean_lik_evals", "wall_seconds"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for key in sorted(groups, key=lambda k: (k[0], k[1], int(k[4]), int(k[2]), k[3])):
        rs = groups[key]

        def mean(col):
            return float(np.mean([float(r[col]) for r in rs]))

        w.writerow([*key, len(rs), f"{mean('ess'):.2f}", f"{mean('msjd'):.6g}",
                    f"{mean('mean_shrink_iters'):.4f}", f"{mean('mean_lik_evals'):.4f}",
                    f"{mean('wall_seconds'):.2f}"])
    atomic_write(out / "report.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mess-bench", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("generate", "run", "sweep", "tune-mh"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--workers", type=int, help="override worker_count")
        s.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
    r = sub.add_parser("report")
    r.add_argument("summaries", nargs="*", type=Path)
    r.add_argument("--config", type=Path, help="sweep config whose summary CSV to aggregate")
    r.add_argument("--out", type=Path, default=Path("."))
    return p


def _resolve(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be nonnegative")
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg = replace(cfg, worker_count=args.workers)
    out = args.out if args.out is not None else cfg.resolve_path(cfg.output_dir)
    return cfg, Path(out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            paths = list(args.summaries)
            if args.config is not None:
                cfg = load_config(args.config)
                paths.append(cfg.resolve_path(cfg.output_dir) / f"{cfg.name}_sweep.csv")
            return cmd_report(paths, args.out)
        cfg, out = _resolve(args)
        handler = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "tune-mh": cmd_tune_mh}
        return handler[args.command](cfg, out)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeFailure, SamplerError, DiagnosticsError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
