"""Asynchronous parallel evaluation with hallucinated pending observations.

A single controller owns the dataset, the surrogate and all job records.
Workers only run the objective and report back over a queue; the
controller refits on every completion and hands the first free slot of each
refresh an acquisition maximizer (exploit) and the remaining free slots
posterior-variance maximizers (explore).
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from s3bo.acquisition import AcquisitionSpec, kappa, maximize_acquisition, maximize_score, relevant_variance
from s3bo.errors import InputError, ObjectiveFailure, ProtocolError
from s3bo.gp_exact import Dataset

log = logging.getLogger(__name__)

PENDING, HALLUCINATED, COMPLETE, FAILED = "pending", "hallucinated", "complete", "failed"
EXPLOIT, EXPLORE, INITIAL = "exploit", "explore", "initial"
EXPLORE_REGIONS = ("relevant", "global")

# stream tags for per-job generators
_TRAIN, _FIT, _ACQ, _DELAY = 1, 2, 3, 4


def job_rng(seed: int, tag: int, counter: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), tag, int(counter)])


def job_seed(seed: int, tag: int, counter: int) -> int:
    return int(job_rng(seed, tag, counter).integers(2**31))


@dataclass
class JobRecord:
    job_id: int
    z: np.ndarray
    task: str
    worker_id: int
    x: np.ndarray | None = None
    status: str = PENDING
    submit_time: float = 0.0
    complete_time: float | None = None
    y: float | None = None
    best_so_far: float | None = None
    refit_ms: float = 0.0
    m: int = 0

    def to_json(self, t0: float = 0.0) -> dict:
        ms = lambda t: None if t is None else round((t - t0) * 1e3, 3)  # noqa: E731
        return {
            "job_id": self.job_id,
            "worker_id": self.worker_id,
            "task": self.task,
            "status": self.status,
            "submit_ms": ms(self.submit_time),
            "complete_ms": ms(self.complete_time),
            "z": [float(v) for v in self.z],
            "y": self.y,
            "best_so_far": self.best_so_far,
            "refit_ms": round(self.refit_ms, 3),
            "m": self.m,
        }


@dataclass
class SchedulerState:
    """Controller-owned bookkeeping: true data, active jobs and their surrogate values."""

    data: Dataset
    batch_size: int = 1
    active: dict = field(default_factory=dict)  # job_id -> JobRecord
    surrogate_y: dict = field(default_factory=dict)  # job_id -> hallucinated value
    completed: int = 0
    failed: int = 0
    stale: bool = True
    exploit_issued: bool = False

    def hallucinated_view(self) -> Dataset:
        ids = [j for j in self.active if j in self.surrogate_y]
        if not ids:
            return self.data.copy()
        Z = np.vstack([self.data.Z] + [self.active[j].z[None, :] for j in ids])
        y = np.concatenate([self.data.y, [self.surrogate_y[j] for j in ids]])
        return Dataset(Z, y, mode=self.data.mode)

    def submit(self, job: JobRecord) -> None:
        if len(self.active) >= self.batch_size:
            raise ProtocolError("no idle worker slot")
        if job.job_id in self.active:
            raise ProtocolError(f"job {job.job_id} already active")
        self.active[job.job_id] = job

    def hallucinate(self, job_id: int, value: float) -> None:
        job = self._get(job_id)
        self.surrogate_y[job_id] = float(value)
        job.status = HALLUCINATED

    def _get(self, job_id: int) -> JobRecord:
        if job_id not in self.active:
            raise ProtocolError(f"unknown or already finished job {job_id}")
        return self.active[job_id]

    def on_complete(self, job_id: int, y: float) -> JobRecord:
        """Swap the job's surrogate row for the true observation."""
        job = self._get(job_id)
        if job.status not in (PENDING, HALLUCINATED):
            raise ProtocolError(f"job {job_id} is {job.status}")
        if not np.isfinite(y):
            raise ProtocolError(f"job {job_id} returned non-finite value {y}")
        del self.active[job_id]
        self.surrogate_y.pop(job_id, None)
        self.data.append(job.z, y)
        job.status, job.y = COMPLETE, float(y)
        job.best_so_far = self.data.best_value
        self.completed += 1
        self.stale = True
        return job

    def on_failure(self, job_id: int) -> JobRecord:
        job = self._get(job_id)
        del self.active[job_id]
        self.surrogate_y.pop(job_id, None)
        job.status = FAILED
        job.best_so_far = self.data.best_value if self.data.n else None
        self.failed += 1
        return job

    def audit(self) -> None:
        """Every active job with a surrogate row is hallucinated, and vice versa."""
        hall = {j for j, job in self.active.items() if job.status == HALLUCINATED}
        if hall != set(self.surrogate_y):
            raise ProtocolError(f"surrogate rows {sorted(self.surrogate_y)} != hallucinated jobs {sorted(hall)}")


@dataclass
class Proposer:
    """Turns a fitted model into the next point; shared by the pool and the sequential loop."""

    acq: AcquisitionSpec
    bounds: tuple
    acq_budget: int = 20
    seed: int = 0
    explore: str = "relevant"  # or "global": unrestricted variance maximization

    def __post_init__(self):
        if self.explore not in EXPLORE_REGIONS:
            raise InputError(f"explore must be one of {EXPLORE_REGIONS}, got {self.explore!r}")

    def propose(self, model, data: Dataset, task: str, job_id: int, view: Dataset | None = None) -> np.ndarray:
        """``view`` is the hallucinated dataset the model was fitted on; its best value
        anchors the acquisition so a pending point scores no improvement over itself."""
        seed = job_seed(self.seed, _ACQ, job_id)
        if task == EXPLOIT:
            extra = data.Z[data.best_index][None, :] if data.n else None
            f_best = view.best_value if view is not None and view.n > data.n else data.best_value
            return maximize_acquisition(model, self.acq, self.bounds, self.acq_budget, seed,
                                        f_best=f_best, n=data.n, extra_starts=extra)
        if self.explore == "global" or data.n == 0:
            var_spec = AcquisitionSpec("variance", self.acq.delta, self.acq.mode)
            return maximize_acquisition(model, var_spec, self.bounds, self.acq_budget, seed)
        beta = kappa(data.n, data.dim, self.acq.delta)
        sgn = 1.0 if self.acq.mode == "maximize" else -1.0
        mu, var = model.predict(data.Z)
        threshold = float(np.max(sgn * mu - beta * np.sqrt(var)))
        return maximize_score(lambda Z: relevant_variance(model, Z, beta, threshold, self.acq.mode),
                              self.bounds, self.acq_budget, seed)


def next_assignment(state: SchedulerState, model, proposer: Proposer, job_id: int):
    """Pick the task for the next free slot and locate its point."""
    task = EXPLORE if state.exploit_issued else EXPLOIT
    view = state.hallucinated_view() if state.surrogate_y else None
    z = proposer.propose(model, state.data, task, job_id, view)
    if task == EXPLOIT:
        state.exploit_issued = True
    return z, task


def run_pool(
    evaluator,
    workers: int,
    budget: int,
    *,
    surrogate,
    proposer: Proposer,
    initial: np.ndarray,
    to_x=None,
    wallclock_s: float | None = None,
    seed: int = 0,
    mode: str = "minimize",
    on_record=None,
    resume: list | None = None,
    stop_after: int | None = None,
    audit: bool = False,
) -> list[JobRecord]:
    """Run until ``budget`` evaluations complete (or the wall clock runs out).

    ``evaluator(x, rng)`` returns the objective value; it runs on worker
    threads and must not touch controller state. ``initial`` holds the
    initial design in search coordinates. ``resume`` replays finished
    records from a checkpoint. ``stop_after`` halts after that many
    completions in total (used to simulate an interrupted run).
    """
    if workers < 1:
        raise InputError("workers must be >= 1")
    to_x = to_x or (lambda z: np.asarray(z, dtype=float))
    initial = np.atleast_2d(np.asarray(initial, dtype=float))
    dim = initial.shape[1]
    state = SchedulerState(Dataset.empty(dim, mode), batch_size=workers)
    trace: list[JobRecord] = []
    next_id = 0
    n_initial_used = 0
    for rec in resume or ():
        trace.append(rec)
        next_id = max(next_id, rec.job_id + 1)
        n_initial_used += rec.task == INITIAL
        if rec.status == COMPLETE:
            state.data.append(rec.z, rec.y)
            state.completed += 1
        else:
            state.failed += 1
    if budget <= 0 or state.completed >= budget:
        return trace

    results: queue.Queue = queue.Queue()
    stamp_lock = threading.Lock()
    clock = time.perf_counter
    t0 = clock()
    free_slots = list(range(workers))
    model = None

    def work(job: JobRecord, x, rng):
        try:
            y, err = float(evaluator(x, rng)), None
        except Exception as exc:  # objective failures are data, not crashes
            y, err = None, exc
        with stamp_lock:
            results.put((job.job_id, y, err, clock()))

    def out_of_time() -> bool:
        return wallclock_s is not None and clock() - t0 > wallclock_s

    def refresh():
        nonlocal model
        t = clock()
        if state.stale:
            surrogate.train(state.data, job_seed(seed, _TRAIN, state.completed))
            state.stale = False
            state.exploit_issued = False
        if state.active:
            # refresh every surrogate row against the new data; stale values would
            # contradict nearby true observations
            base = surrogate.fit(state.data, job_seed(seed, _FIT, next_id))
            ids = list(state.active)
            mu, _ = base.predict(np.vstack([state.active[j].z for j in ids]))
            for jid, value in zip(ids, mu):
                state.hallucinate(jid, value)
        model = surrogate.fit(state.hallucinated_view(), job_seed(seed, _FIT, next_id))
        return (clock() - t) * 1e3

    def launch(pool, z, task, refit_ms):
        nonlocal next_id
        slot = free_slots.pop(0)
        job = JobRecord(next_id, np.asarray(z, dtype=float), task, slot, refit_ms=refit_ms,
                        m=surrogate.inducing_count(max(state.data.n, 1)))
        job.x = to_x(job.z)
        next_id += 1
        state.submit(job)
        job.submit_time = clock()
        pool.submit(work, job, job.x, job_rng(seed, _DELAY, job.job_id))
        return job

    def fill(pool):
        nonlocal n_initial_used, model
        while free_slots and not out_of_time():
            if state.completed + len(state.active) >= budget:
                return
            if stop_after is not None and state.completed >= stop_after:
                return
            if n_initial_used < len(initial):
                launch(pool, initial[n_initial_used], INITIAL, 0.0)
                n_initial_used += 1
                continue
            if state.data.n == 0:
                if not state.active:
                    raise ObjectiveFailure(f"all {state.failed} initial evaluations failed")
                return  # wait for the first observation
            refit_ms = refresh() if (state.stale or model is None) else 0.0
            if audit:
                state.audit()
            z, task = next_assignment(state, model, proposer, next_id)
            job = launch(pool, z, task, refit_ms)
            mu, _ = model.predict(job.z[None, :])
            state.hallucinate(job.job_id, mu[0])
            t = clock()
            model = surrogate.fit(state.hallucinated_view(), job_seed(seed, _FIT, next_id))
            job.refit_ms += (clock() - t) * 1e3

    def finish(job: JobRecord):
        trace.append(job)
        if on_record is not None:
            on_record(job, t0)

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="s3bo-worker") as pool:
        fill(pool)
        while state.active:
            batch = [results.get()]
            while True:
                try:
                    batch.append(results.get_nowait())
                except queue.Empty:
                    break
            for job_id, y, err, t_done in batch:
                job = state.active[job_id]
                job.complete_time = t_done
                free_slots.append(job.worker_id)
                if err is None and y is not None and np.isfinite(y):
                    finish(state.on_complete(job_id, y))
                else:
                    log.warning("job %d failed: %s", job_id, err if err is not None else y)
                    finish(state.on_failure(job_id))
                    state.stale = True
            free_slots.sort()
            finished = state.completed + state.failed
            # a handful of early failures is tolerated before the ratio is enforced
            if state.failed >= 2 and finished >= 4 and state.failed >= 0.5 * finished:
                for job_id in list(state.active):
                    finish(state.on_failure(job_id))
                raise ObjectiveFailure(f"{state.failed} of {finished} evaluations failed")
            fill(pool)
    return trace


def sequential_loop(evaluator, budget: int, *, surrogate, proposer: Proposer, initial: np.ndarray,
                    to_x=None, seed: int = 0, mode: str = "minimize") -> list[tuple[np.ndarray, float]]:
    """Plain one-at-a-time optimization loop; the reference for ``run_pool(workers=1)``."""
    to_x = to_x or (lambda z: np.asarray(z, dtype=float))
    initial = np.atleast_2d(np.asarray(initial, dtype=float))
    data = Dataset.empty(initial.shape[1], mode)
    out = []
    for job_id in range(budget):
        if job_id < len(initial):
            z = initial[job_id]
        else:
            surrogate.train(data, job_seed(seed, _TRAIN, data.n))
            model = surrogate.fit(data, job_seed(seed, _FIT, job_id))
            z = proposer.propose(model, data, EXPLOIT, job_id)
        y = float(evaluator(to_x(z), job_rng(seed, _DELAY, job_id)))
        data.append(z, y)
        out.append((np.asarray(z, dtype=float), y))
    return out
