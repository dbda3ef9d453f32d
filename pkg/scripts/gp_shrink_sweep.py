"""Mean shrink iterations and likelihood evaluations per step against M on
synthetic GP classification."""

import argparse
import csv
import sys

from mess.benchmarks import gp_shrink_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--M", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--seed", type=int, default=70)
    p.add_argument("--n-points", type=int, default=200)
    p.add_argument("--distance", default="angular")
    p.add_argument("--csv", help="optional output file")
    a = p.parse_args()
    sweep = gp_shrink_sweep(a.M, a.iterations, a.seed, a.n_points, distance=a.distance)
    rows = [{"M": m, "mean_shrink_iters": k, "mean_lik_evals": e}
            for m, k, e in zip(sweep.M, sweep.mean_shrink, sweep.mean_evaluations)]
    out = open(a.csv, "w", newline="") if a.csv else sys.stdout
    w = csv.DictWriter(out, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
