"""Effective sample size of a0_1 and a0_2 against dimension for MESS(M=1),
MESS(M=50) and a random-walk MH sampler tuned once at d=20."""

import argparse
import tempfile

from mess.benchmarks import solute_dimension_study


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=int, nargs="+", default=[10, 20, 30])
    p.add_argument("--iterations", type=int, default=30_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--M", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="directory for the per-run CSV files (default: a temporary directory)")
    a = p.parse_args()
    out = a.out or tempfile.mkdtemp(prefix="solute_dims_")
    s = solute_dimension_study(out, a.dims, a.iterations, a.seed, a.data_seed, a.M, workers=a.workers)
    print(f"# sigma_mh={s.sigma_mh:.6g} tuning_rate={s.tuning.rate:.4f} verification={s.tuning.verification_rate:.4f} files in {out}")
    print("sampler,d,ess_a0_1,ess_a0_2,mean_shrink_iters")
    for (label, d), run in sorted(s.runs.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        e = run.ess()
        print(f"{label},{d},{e[0]:.1f},{e[1]:.1f},{s.mean_shrink(label, d):.3f}")


if __name__ == "__main__":
    main()
