"""Batch-size effect on Hartmann4: wall time and final best for several worker counts.

    python3 scripts/batch_effect.py --workers 1 2 4 8 --seeds 3
"""

import argparse
from pathlib import Path

import numpy as np

from s3bo.config import RunConfig
from s3bo.driver import TRACE_NAME, report, run_campaign, worker_idle_fractions


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--delay", type=float, nargs=2, default=[0.05, 0.5], metavar=("LB", "UB"))
    p.add_argument("--out", default="runs/batch")
    args = p.parse_args()

    print("workers  median_wall_s  median_best  max_idle")
    for w in args.workers:
        walls, bests, idle, traces = [], [], [], []
        for seed in range(args.seeds):
            out = Path(args.out) / f"w{w}_seed{seed}"
            cfg = RunConfig().with_overrides({
                "bench.name": "hartmann4", "embed.kind": "identity", "embed.dim_low": 4, "run.n_init": 2,
                "sched.workers": w, "sched.budget": args.budget, "bench.delay_lb_s": args.delay[0],
                "bench.delay_ub_s": args.delay[1], "run.seed": seed, "run.out_dir": str(out),
            })
            lines, summary = run_campaign(cfg)
            walls.append(summary["wall_s"])
            bests.append(summary["best_y"])
            idle.append(max(worker_idle_fractions(lines).values()))
            traces.append(out / TRACE_NAME)
        report(traces, Path(args.out) / f"report_w{w}")
        print(f"{w:7d}  {np.median(walls):13.2f}  {np.median(bests):11.4f}  {max(idle):8.3f}")


if __name__ == "__main__":
    main()
