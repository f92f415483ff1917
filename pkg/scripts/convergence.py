"""High-dimensional convergence: several seeds of one benchmark, then a convergence report.

    python3 scripts/convergence.py --bench sphere --dim 1000 --low 4 --budget 150 --seeds 10
    python3 scripts/convergence.py --bench zdt1 --dim 1000 --low 10 --budget 200 --seeds 10
"""

import argparse
from pathlib import Path

import numpy as np

from s3bo.config import RunConfig
from s3bo.driver import TRACE_NAME, report, run_campaign


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bench", default="sphere")
    p.add_argument("--dim", type=int, default=1000)
    p.add_argument("--low", type=int, default=4)
    p.add_argument("--budget", type=int, default=150)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--acq", default="ei")
    p.add_argument("--out", default="runs/convergence")
    args = p.parse_args()

    root = Path(args.out) / f"{args.bench}_D{args.dim}_d{args.low}"
    traces, starts, finals = [], [], []
    for seed in range(args.seeds):
        cfg = RunConfig().with_overrides({
            "bench.name": args.bench, "bench.dim": args.dim, "embed.dim_low": args.low,
            "sched.budget": args.budget, "acq.kind": args.acq, "run.seed": seed,
            "run.out_dir": str(root / f"seed{seed}"),
        })
        lines, summary = run_campaign(cfg)
        starts.append(lines[cfg.n_init - 1]["best_so_far"])
        finals.append(summary["best_y"])
        traces.append(root / f"seed{seed}" / TRACE_NAME)
        print(f"seed {seed}: initial best {starts[-1]:.4g} -> final {finals[-1]:.4g} ({summary['wall_s']:.1f}s)")
    ratio = np.median(np.asarray(starts) / np.maximum(finals, 1e-300))
    print(f"median final {np.median(finals):.4g}, median improvement {ratio:.3g}x")
    out = report(traces, root / "report")
    print(f"convergence CSV: {out['paths']['convergence_summary']}")


if __name__ == "__main__":
    main()
