"""Campaign driver: wires embedding, surrogate, scheduler and benchmark together.

Also hosts the offline pieces: trace reports and the sparse-GP stress test.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from s3bo.acquisition import AcquisitionSpec
from s3bo.benchmarks import BenchmarkSpec, evaluate
from s3bo.config import RunConfig
from s3bo.design import latin_hypercube
from s3bo.embedding import draw_embedding, embed_to_x, identity_embedding
from s3bo.errors import ConfigError, InputError
from s3bo.gp_exact import Dataset, train_hypers_exact
from s3bo.gp_sparse import fit_sparse, sample_inducing
from s3bo.kernels import KernelSpec
from s3bo.scheduler import COMPLETE, JobRecord, Proposer, run_pool, sequential_loop
from s3bo.surrogate import Surrogate, SurrogateSettings

log = logging.getLogger(__name__)

TIMING_FIELDS = ("submit_ms", "complete_ms", "refit_ms")
TRACE_NAME, CHECKPOINT_NAME, SUMMARY_NAME = "trace.jsonl", "checkpoint.json", "summary.json"


@dataclass
class Campaign:
    """Everything built from a config that the loop needs."""

    config: RunConfig
    bench: BenchmarkSpec
    embedding: object
    surrogate: Surrogate
    proposer: Proposer
    initial: np.ndarray

    def to_x(self, z):
        return embed_to_x(self.embedding, z)

    def evaluator(self, x, rng):
        return evaluate(self.bench, x, rng)


def build_campaign(cfg: RunConfig) -> Campaign:
    b = cfg.bench
    delay = None if b.delay_lb_s is None else (b.delay_lb_s, b.delay_ub_s)
    try:
        bench = BenchmarkSpec(b.name, b.dim, b.lower, b.upper, delay, None, b.normalize_g)
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    lo, hi = bench.bounds
    if cfg.embed.kind == "identity":
        emb = identity_embedding(lo, hi)
    else:
        emb = draw_embedding(bench.D, cfg.embed.dim_low, lo, hi, cfg.embed_seed)
    zb = emb.z_bounds
    settings = SurrogateSettings(
        family=cfg.kernel.family, amplitude=cfg.kernel.amplitude, lengthscale=cfg.kernel.lengthscale,
        ard=cfg.kernel.ard, exact_below_n=cfg.gp.exact_below_n, variant=cfg.gp.variant,
        num_inducing=cfg.gp.num_inducing, objective=cfg.gp.objective, restarts=cfg.gp.restarts,
        freeze_inducing=cfg.gp.freeze_inducing,
    )
    acq = AcquisitionSpec(cfg.acq.kind, cfg.acq.delta, cfg.run.mode)
    proposer = Proposer(acq, zb, cfg.acq.budget, cfg.run.seed, cfg.acq.explore)
    initial = latin_hypercube(zb, cfg.n_init, [cfg.run.seed, 0])
    return Campaign(cfg, bench, emb, Surrogate(settings, zb, cfg.run.seed), proposer, initial)


def trace_line(job: JobRecord, index: int, t0: float) -> dict:
    rec = {"index": index}
    rec.update(job.to_json(t0))
    return rec


def canonicalize(record: dict) -> dict:
    """Zero the wall-clock fields so traces can be compared across runs."""
    out = dict(record)
    for key in TIMING_FIELDS:
        if key in out:
            out[key] = 0.0
    return out


def record_from_json(rec: dict) -> JobRecord:
    job = JobRecord(int(rec["job_id"]), np.asarray(rec["z"], dtype=float), rec["task"], int(rec["worker_id"]))
    job.status = rec["status"]
    job.y = rec["y"]
    job.best_so_far = rec["best_so_far"]
    job.refit_ms = float(rec.get("refit_ms") or 0.0)
    job.m = int(rec.get("m") or 0)
    job.submit_time = (rec.get("submit_ms") or 0.0) / 1e3
    job.complete_time = None if rec.get("complete_ms") is None else rec["complete_ms"] / 1e3
    return job


def read_trace(path) -> tuple[list[dict], int]:
    """Parse a JSONL trace, skipping malformed lines; returns (records, skipped)."""
    records, skipped = [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                float(rec["best_so_far"] if rec["best_so_far"] is not None else 0.0)
                int(rec["worker_id"])
                records.append(rec)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
    if skipped:
        log.warning("%s: skipped %d malformed trace lines", path, skipped)
    return records, skipped


def run_campaign(cfg: RunConfig, resume: bool = False, stop_after: int | None = None):
    """Run one optimization campaign; returns ``(trace records, summary dict)``.

    The trace is streamed to ``<out_dir>/trace.jsonl`` and checkpointed every
    ``run.checkpoint_every`` completions. With ``resume`` the checkpoint's
    finished jobs are replayed and the run continues from there.
    """
    camp = build_campaign(cfg)
    out = Path(cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    digest = cfg.digest()

    replay: list[JobRecord] = []
    lines: list[dict] = []
    ckpt = out / CHECKPOINT_NAME
    if resume and ckpt.exists():
        state = json.loads(ckpt.read_text(encoding="utf-8"))
        if state["config_digest"] != digest:
            raise ConfigError("checkpoint was written with a different configuration")
        lines = state["records"]
        replay = [record_from_json(r) for r in lines]
        # hyperparameters warm-start the next training exactly as in an uninterrupted run
        camp.surrogate.load_state(state["surrogate"])
    trace_fh = open(out / TRACE_NAME, "w", encoding="utf-8")
    for rec in lines:
        trace_fh.write(json.dumps(rec) + "\n")
    trace_fh.flush()

    def write_checkpoint():
        payload = {
            "config_digest": digest,
            "seed": cfg.run.seed,
            "embed_seed": cfg.embed_seed,
            "records": lines,
            "surrogate": camp.surrogate.state(),
        }
        tmp = ckpt.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload), encoding="utf-8")
        tmp.replace(ckpt)

    def on_record(job: JobRecord, t0: float):
        rec = trace_line(job, len(lines), t0)
        lines.append(rec)
        trace_fh.write(json.dumps(rec) + "\n")
        trace_fh.flush()
        if job.status == COMPLETE and sum(r["status"] == COMPLETE for r in lines) % cfg.run.checkpoint_every == 0:
            write_checkpoint()

    started = time.perf_counter()
    status = "ok"
    try:
        trace = run_pool(
            camp.evaluator, cfg.sched.workers, cfg.sched.budget,
            surrogate=camp.surrogate, proposer=camp.proposer, initial=camp.initial, to_x=camp.to_x,
            wallclock_s=cfg.sched.wallclock_s, seed=cfg.run.seed, mode=cfg.run.mode,
            on_record=on_record, resume=replay, stop_after=stop_after, audit=cfg.run.audit,
        )
    except Exception:
        status = "aborted"
        raise
    finally:
        trace_fh.close()
        if status != "ok" or stop_after is not None:
            write_checkpoint()
    wall = time.perf_counter() - started
    summary = summarize(camp, trace, wall)
    (out / SUMMARY_NAME).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if stop_after is None:
        write_checkpoint()
    return lines, summary


def summarize(camp: Campaign, trace: list[JobRecord], wall_s: float) -> dict:
    done = [j for j in trace if j.status == COMPLETE]
    summary = {
        "bench": camp.bench.name,
        "D": camp.bench.D,
        "d": camp.embedding.d,
        "evaluations": len(done),
        "failures": len(trace) - len(done),
        "wall_s": round(wall_s, 3),
        "status": "complete" if len(done) >= camp.config.sched.budget else "stopped",
        "best_y": None,
        "best_z": None,
        "best_x": None,
    }
    if done:
        sign = 1.0 if camp.config.run.mode == "minimize" else -1.0
        best = min(done, key=lambda j: sign * j.y)
        x = camp.to_x(best.z)
        summary.update(best_y=best.y, best_z=[float(v) for v in best.z], best_x=[float(v) for v in x])
    return summary


def reference_sequence(cfg: RunConfig) -> list[tuple[np.ndarray, float]]:
    """(z, y) pairs from the plain sequential loop for the same configuration."""
    camp = build_campaign(cfg)
    return sequential_loop(camp.evaluator, cfg.sched.budget, surrogate=camp.surrogate, proposer=camp.proposer,
                           initial=camp.initial, to_x=camp.to_x, seed=cfg.run.seed, mode=cfg.run.mode)


# --- reports -----------------------------------------------------------------


def convergence_rows(runs: dict[str, list[dict]]):
    """Per-run rows plus the across-run median/quartiles aligned by evaluation index."""
    per_run = []
    curves = []
    for name, recs in runs.items():
        done = [r for r in recs if r.get("status", COMPLETE) == COMPLETE]
        curve = []
        for k, r in enumerate(done):
            per_run.append({"run": name, "evaluation": k, "complete_ms": r.get("complete_ms"),
                            "best_so_far": r["best_so_far"]})
            curve.append(r["best_so_far"])
        curves.append(curve)
    summary = []
    length = max((len(c) for c in curves), default=0)
    for k in range(length):
        vals = np.array([c[k] for c in curves if len(c) > k], dtype=float)
        q25, med, q75 = np.percentile(vals, [25, 50, 75])
        summary.append({"evaluation": k, "runs": vals.size, "median": med, "q25": q25, "q75": q75})
    return per_run, summary


def schedule_rows(runs: dict[str, list[dict]]):
    rows = []
    for name, recs in runs.items():
        for r in recs:
            rows.append({"run": name, "worker": r["worker_id"], "start": r["submit_ms"], "end": r["complete_ms"],
                         "task": r["task"], "job_id": r["job_id"]})
    return rows


def worker_idle_fractions(records: list[dict]) -> dict[int, float]:
    """Idle time between a worker's first and last job divided by its busy time."""
    by_worker: dict[int, list[tuple[float, float]]] = {}
    for r in records:
        if r.get("complete_ms") is None:
            continue
        by_worker.setdefault(int(r["worker_id"]), []).append((r["submit_ms"], r["complete_ms"]))
    out = {}
    for w, spans in by_worker.items():
        spans.sort()
        busy = sum(e - s for s, e in spans)
        idle = sum(max(0.0, spans[i + 1][0] - spans[i][1]) for i in range(len(spans) - 1))
        out[w] = idle / busy if busy > 0 else 0.0
    return out


def write_csv(path, rows: list[dict], fields=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = fields or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    return path


def report(trace_files, out_dir) -> dict:
    """Write convergence and worker-schedule CSVs; returns paths and skipped-line count."""
    runs, skipped = {}, 0
    for i, path in enumerate(trace_files):
        recs, bad = read_trace(path)
        skipped += bad
        runs[f"{i}:{Path(path).parent.name or Path(path).stem}"] = recs
    if not runs:
        raise InputError("report needs at least one trace file")
    per_run, summary = convergence_rows(runs)
    out = Path(out_dir)
    paths = {
        "convergence": write_csv(out / "convergence.csv", per_run,
                                 ["run", "evaluation", "complete_ms", "best_so_far"]),
        "convergence_summary": write_csv(out / "convergence_summary.csv", summary,
                                         ["evaluation", "runs", "median", "q25", "q75"]),
        "schedule": write_csv(out / "schedule.csv", schedule_rows(runs),
                              ["run", "worker", "start", "end", "task", "job_id"]),
    }
    return {"paths": paths, "skipped": skipped}


# --- sparse GP stress test ---------------------------------------------------


def _sphere(X):
    return np.sum(X, axis=1) ** 2


def _best_of(fn, repeats: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best * 1e3, out


def stress_gp(n_list, m_list, seeds=(0,), n_test: int = 1000, dim: int = 3, repeats: int = 3,
              family: str = "matern52", train_n: int = 300):
    """FIC fit/predict timing and held-out RMSE on the sphere over ``[-1, 1]^dim``.

    Hyperparameters are learned once per seed by exact-GP marginal likelihood
    on a ``train_n`` subsample and then held fixed, so rows differ only in
    ``n`` and ``m``. Timings are the best of ``repeats`` runs.
    """
    bounds = (np.full(dim, -1.0), np.full(dim, 1.0))
    rows = []
    for seed in seeds:
        X_test = latin_hypercube(bounds, n_test, [seed, 99])
        y_test = _sphere(X_test)
        X_sub = latin_hypercube(bounds, train_n, [seed, 98])
        sub = Dataset(X_sub, _sphere(X_sub))
        init = KernelSpec(family, float(np.std(sub.y)), (0.5,) * dim)
        spec, noise, _ = train_hypers_exact(sub, init, 1e-6 * np.var(sub.y), seed=seed)
        noise = max(noise, 1e-6 * float(np.var(sub.y)))
        for n in n_list:
            X = latin_hypercube(bounds, int(n), [seed, int(n)])
            data = Dataset(X, _sphere(X))
            for m in m_list:
                ind = sample_inducing(bounds, int(m), int(n), [seed, int(n), int(m)])
                fit_ms, model = _best_of(lambda: fit_sparse(data, spec, noise, None, ind, "fic"), repeats)
                pred_ms, (mu, _) = _best_of(lambda: model.predict(X_test), repeats)
                rmse = float(np.sqrt(np.mean((mu - y_test) ** 2)))
                rows.append({"seed": seed, "n": int(n), "m": int(m), "fit_ms": round(fit_ms, 4),
                             "predict_ms": round(pred_ms, 4), "rmse": rmse})
                log.info("stress seed=%s n=%d m=%d fit=%.2fms rmse=%.3g", seed, n, m, fit_ms, rmse)
    return rows
