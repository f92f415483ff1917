"""Sparse GP data-size stress test on the 3-D sphere; prints the fit-time and RMSE tables.

    python3 scripts/stress.py --seeds 5
    python3 scripts/stress.py --n 1000000 --m 300 --seeds 1    # extended run, slow
"""

import argparse
from pathlib import Path

import numpy as np

from s3bo.driver import stress_gp, write_csv


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10000, 100000])
    p.add_argument("--m", type=int, nargs="+", default=[10, 50, 100])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--out", default="runs/stress")
    args = p.parse_args()

    rows = stress_gp(args.n, args.m, seeds=range(args.seeds), n_test=args.n_test)
    path = write_csv(Path(args.out) / "stress.csv", rows, ["seed", "n", "m", "fit_ms", "predict_ms", "rmse"])
    for key, label in (("fit_ms", "median fit time [ms]"), ("rmse", "median held-out RMSE")):
        print(f"\n{label}")
        print("n \\ m".ljust(10) + "".join(f"{m:>12d}" for m in args.m))
        for n in args.n:
            cells = [np.median([r[key] for r in rows if r["n"] == n and r["m"] == m]) for m in args.m]
            print(f"{n:<10d}" + "".join(f"{c:12.4g}" for c in cells))
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
