"""Command-line entry point (``s3bo``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from s3bo import driver
from s3bo.benchmarks import NAMES, BenchmarkSpec, value
from s3bo.config import RunConfig, load_config, parse_config
from s3bo.embedding import mc_bound_probability
from s3bo.errors import ConfigError, InputError, NumericalError, ObjectiveFailure

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OBJECTIVE = 2, 3, 4

log = logging.getLogger("s3bo")


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.replace(",", " ").split()]


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out is not None:
        overrides["run.out_dir"] = args.out
    for item in args.set or ():
        key, _, raw = item.partition("=")
        if not _:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = raw.strip()
    if overrides:
        # rebuild the text so overrides go through the same parser as the file
        keep = [ln for ln in cfg.to_text().splitlines() if ln.split("=", 1)[0].strip() not in overrides]
        cfg = parse_config("\n".join(keep + [f"{k} = {v}" for k, v in overrides.items()]) + "\n")
    _, summary = driver.run_campaign(cfg, resume=args.resume)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_stress(args) -> int:
    n_list = _ints(args.n_list)
    m_list = _ints(args.m_list)
    if args.extended:
        n_list, m_list = [10**6], [300]
    rows = driver.stress_gp(n_list, m_list, seeds=_ints(args.seeds), n_test=args.n_test,
                            repeats=args.repeats)
    path = driver.write_csv(Path(args.out) / "stress.csv", rows,
                            ["seed", "n", "m", "fit_ms", "predict_ms", "rmse"])
    for r in rows:
        print(f"seed={r['seed']} n={r['n']} m={r['m']} fit_ms={r['fit_ms']:.2f} "
              f"predict_ms={r['predict_ms']:.2f} rmse={r['rmse']:.4g}")
    print(f"wrote {path}")
    return 0


def cmd_embed_prob(args) -> int:
    p = mc_bound_probability(args.d, args.samples, args.seed, scaled=not args.unscaled, interval=args.interval)
    print(f"{p:.6f}")
    return 0


def cmd_report(args) -> int:
    out = driver.report(args.traces, args.out)
    for name, path in out["paths"].items():
        print(f"{name}: {path}")
    print(f"skipped malformed lines: {out['skipped']}")
    return 0


def cmd_schedule_plot(args) -> int:
    runs = {}
    skipped = 0
    for path in args.traces:
        recs, bad = driver.read_trace(path)
        runs[str(path)] = recs
        skipped += bad
    path = driver.write_csv(args.out, driver.schedule_rows(runs),
                            ["run", "worker", "start", "end", "task", "job_id"])
    print(f"wrote {path} (skipped {skipped})")
    return 0


def cmd_eval(args) -> int:
    try:
        x = np.loadtxt(args.x, ndmin=1)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read point from {args.x}: {exc}") from exc
    dim = args.dim if args.dim is not None else x.size
    spec = BenchmarkSpec(args.bench, dim, normalize_g=args.normalize_g)
    print(repr(value(spec, x)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="s3bo", description="Scalable asynchronous Bayesian optimization")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an optimization campaign")
    r.add_argument("--config", type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    r.add_argument("--resume", action="store_true", help="continue from the checkpoint in the output dir")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("stress-gp", help="sparse GP fit/predict timing on the 3-D sphere")
    s.add_argument("--n-list", default="100 1000 10000 100000")
    s.add_argument("--m-list", default="10 50 100")
    s.add_argument("--seeds", default="0")
    s.add_argument("--n-test", type=int, default=1000)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--extended", action="store_true", help="single large run at n=1e6, m=300")
    s.add_argument("--out", default="runs/stress")
    s.set_defaults(func=cmd_stress)

    e = sub.add_parser("embed-prob", help="Monte Carlo probability that an embedded coordinate stays in bounds")
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--samples", type=int, default=10**6)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--interval", choices=("sqrt_d", "unit"), default="sqrt_d")
    e.add_argument("--unscaled", action="store_true")
    e.set_defaults(func=cmd_embed_prob)

    rep = sub.add_parser("report", help="convergence and schedule CSVs from traces")
    rep.add_argument("--traces", nargs="+", required=True)
    rep.add_argument("--out", default="runs/report")
    rep.set_defaults(func=cmd_report)

    sp = sub.add_parser("schedule-plot", help="worker schedule bars (worker, start, end) as CSV")
    sp.add_argument("--traces", nargs="+", required=True)
    sp.add_argument("--out", default="runs/report/schedule.csv")
    sp.set_defaults(func=cmd_schedule_plot)

    ev = sub.add_parser("eval", help="evaluate a benchmark at a point read from a text file")
    ev.add_argument("--bench", choices=NAMES, required=True)
    ev.add_argument("--x", required=True)
    ev.add_argument("--dim", type=int)
    ev.add_argument("--normalize-g", action="store_true")
    ev.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ObjectiveFailure as exc:
        print(f"objective failure: {exc}", file=sys.stderr)
        return EXIT_OBJECTIVE


if __name__ == "__main__":
    sys.exit(main())
