import threading
import time

import numpy as np
import pytest

from s3bo.acquisition import AcquisitionSpec
from s3bo.errors import InputError, ObjectiveFailure, ProtocolError
from s3bo.gp_exact import Dataset, fit_exact
from s3bo.kernels import KernelSpec
from s3bo.scheduler import (
    COMPLETE,
    EXPLOIT,
    EXPLORE,
    FAILED,
    HALLUCINATED,
    INITIAL,
    JobRecord,
    Proposer,
    SchedulerState,
    job_rng,
    next_assignment,
    run_pool,
    sequential_loop,
)
from s3bo.surrogate import Surrogate, SurrogateSettings

BOX2 = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))


def sphere(x, rng=None):
    return float(np.sum(x) ** 2)


def real_parts(seed=0, bounds=BOX2, explore="relevant"):
    surrogate = Surrogate(SurrogateSettings(family="matern52", restarts=2), bounds, seed)
    proposer = Proposer(AcquisitionSpec("ei"), bounds, acq_budget=5, seed=seed, explore=explore)
    return surrogate, proposer


class StubModel:
    def predict(self, Z):
        Z = np.atleast_2d(Z)
        return np.zeros(len(Z)), np.ones(len(Z))


class StubSurrogate:
    """Constant model with no training cost, to isolate scheduling overhead."""

    def train(self, data, seed):
        pass

    def fit(self, view, seed):
        return StubModel()

    def inducing_count(self, n):
        return n


class StubProposer:
    def propose(self, model, data, task, job_id, view=None):
        return job_rng(0, 99, job_id).uniform(-1, 1, size=data.dim)


def fresh_state(n=4, batch=3, seed=0):
    rng = np.random.default_rng(seed)
    Z = rng.uniform(-1, 1, size=(n, 1))
    return SchedulerState(Dataset(Z, np.sin(3 * Z[:, 0])), batch_size=batch)


def fit(view):
    return fit_exact(view, KernelSpec("matern52", 1.0, (0.4,)), 1e-6)


def assign_batch(state, proposer, k):
    tasks, points = [], []
    model = fit(state.data)
    for job_id in range(k):
        z, task = next_assignment(state, model, proposer, job_id)
        state.submit(JobRecord(job_id, z, task, job_id))
        state.hallucinate(job_id, model.predict(z[None])[0][0])
        model = fit(state.hallucinated_view())
        tasks.append(task)
        points.append(z)
    return tasks, points


def test_batch_of_three_is_one_exploit_then_explores():
    proposer = Proposer(AcquisitionSpec("ei"), ([-1.0], [1.0]), acq_budget=5)
    tasks, _ = assign_batch(fresh_state(), proposer, 3)
    assert tasks == [EXPLOIT, EXPLORE, EXPLORE]


@pytest.mark.parametrize("explore", ["relevant", "global"])
def test_consecutive_explores_do_not_revisit(explore):
    proposer = Proposer(AcquisitionSpec("ei"), ([-1.0], [1.0]), acq_budget=5, explore=explore)
    state = fresh_state()
    state.exploit_issued = True
    tasks, points = assign_batch(state, proposer, 2)
    assert tasks == [EXPLORE, EXPLORE]
    assert abs(points[0][0] - points[1][0]) >= 1e-3 * 2.0


def test_single_worker_always_exploits():
    trace = run_pool(sphere, 1, 8, initial=np.array([[0.5, 0.1], [-0.3, 0.2]]),
                     surrogate=real_parts()[0], proposer=real_parts()[1])
    assert [r.task for r in trace] == [INITIAL] * 2 + [EXPLOIT] * 6


def test_completion_protocol():
    state = SchedulerState(Dataset([[0.0]], [1.0]), batch_size=2)
    state.submit(JobRecord(0, np.array([0.5]), EXPLOIT, 0))
    state.hallucinate(0, 0.7)
    state.submit(JobRecord(1, np.array([-0.5]), EXPLORE, 1))
    state.hallucinate(1, 0.9)
    with pytest.raises(ProtocolError):
        state.submit(JobRecord(2, np.array([0.1]), EXPLORE, 0))
    state.on_complete(0, 3.0)  # worse than the incumbent
    assert state.data.best_value == 1.0
    view = state.hallucinated_view()
    assert view.n == state.data.n + 1 and view.y[-1] == 0.9
    state.on_complete(1, 0.2)
    view = state.hallucinated_view()
    np.testing.assert_array_equal(view.Z, state.data.Z)
    np.testing.assert_array_equal(view.y, state.data.y)
    assert state.data.best_value == 0.2
    with pytest.raises(ProtocolError):
        state.on_complete(1, 0.1)
    with pytest.raises(ProtocolError):
        state.on_complete(42, 0.1)


def test_non_finite_result_and_audit_are_caught():
    state = SchedulerState(Dataset([[0.0]], [1.0]), batch_size=2)
    state.submit(JobRecord(0, np.array([0.5]), EXPLOIT, 0))
    with pytest.raises(ProtocolError):
        state.on_complete(0, np.nan)
    state.audit()
    state.surrogate_y[0] = 0.3  # row without the status change
    with pytest.raises(ProtocolError):
        state.audit()
    state.hallucinate(0, 0.3)
    state.audit()
    assert state.active[0].status == HALLUCINATED
    assert state.on_failure(0).status == FAILED and not state.surrogate_y


def test_budget_zero_gives_empty_trace():
    s, p = real_parts()
    assert run_pool(sphere, 2, 0, initial=np.zeros((2, 2)), surrogate=s, proposer=p) == []
    with pytest.raises(InputError):
        run_pool(sphere, 0, 5, initial=np.zeros((2, 2)), surrogate=s, proposer=p)


def test_single_worker_matches_sequential_reference():
    initial = np.array([[0.5, 0.1], [-0.3, 0.2]])
    s1, p1 = real_parts(seed=3)
    s2, p2 = real_parts(seed=3)
    pool = run_pool(sphere, 1, 5, initial=initial, surrogate=s1, proposer=p1, seed=3)
    seq = sequential_loop(sphere, 5, initial=initial, surrogate=s2, proposer=p2, seed=3)
    assert len(pool) == len(seq) == 5
    for rec, (z, y) in zip(pool, seq):
        np.testing.assert_array_equal(rec.z, z)
        assert rec.y == y


def test_repeated_single_worker_runs_are_identical():
    initial = np.array([[0.5, 0.1], [-0.3, 0.2]])
    runs = []
    for _ in range(2):
        s, p = real_parts(seed=1)
        runs.append(run_pool(sphere, 1, 10, initial=initial, surrogate=s, proposer=p, seed=1))
    assert [(r.z.tolist(), r.y, r.task) for r in runs[0]] == [(r.z.tolist(), r.y, r.task) for r in runs[1]]


def slow(t_lb, t_ub):
    def evaluator(x, rng):
        time.sleep(rng.uniform(t_lb, t_ub))
        return sphere(x)
    return evaluator


def timed_run(workers, budget, evaluator, **kw):
    t = time.perf_counter()
    trace = run_pool(evaluator, workers, budget, initial=np.zeros((2, 2)), surrogate=StubSurrogate(),
                     proposer=StubProposer(), **kw)
    return time.perf_counter() - t, trace


def test_four_workers_more_than_halve_wall_time():
    for _ in range(3):
        one, _ = timed_run(1, 40, slow(0.001, 0.030))
        four, _ = timed_run(4, 40, slow(0.001, 0.030))
        assert four < 0.5 * one


def test_no_lost_updates_and_monotone_incumbent():
    s, p = real_parts(seed=2)
    trace = run_pool(slow(0.0, 0.005), 3, 15, initial=np.array([[0.5, 0.1], [-0.3, 0.2]]),
                     surrogate=s, proposer=p, seed=2, audit=True)
    ids = [r.job_id for r in trace]
    assert sorted(ids) == list(range(15))
    assert all(r.status == COMPLETE for r in trace)
    best = [r.best_so_far for r in trace]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert best[-1] == min(r.y for r in trace)


def test_failed_evaluations_are_dropped_not_retried():
    def flaky(x, rng):
        if rng.random() < 0.2:
            raise RuntimeError("simulated crash")
        return sphere(x)

    _, trace = timed_run(2, 20, flaky)
    done = [r for r in trace if r.status == COMPLETE]
    failed = [r for r in trace if r.status == FAILED]
    assert len(done) == 20 and failed
    assert len({r.job_id for r in trace}) == len(trace)


def test_mostly_failing_objective_aborts_with_every_job_recorded():
    records = []

    def broken(x, rng):
        raise RuntimeError("always fails")

    with pytest.raises(ObjectiveFailure):
        timed_run(3, 20, broken, on_record=lambda job, t0: records.append(job))
    assert records and all(r.status == FAILED for r in records)
    assert len({r.job_id for r in records}) == len(records)


def test_wall_clock_limit_drains_in_flight_jobs():
    elapsed, trace = timed_run(2, 1000, slow(0.02, 0.02), wallclock_s=0.2)
    assert 0 < len(trace) < 1000
    assert all(r.status == COMPLETE for r in trace)
    assert elapsed < 1.0


def test_evaluator_runs_off_the_controller_thread():
    seen = set()

    def spy(x, rng):
        seen.add(threading.current_thread().name)
        return sphere(x)

    timed_run(2, 6, spy)
    assert all(name.startswith("s3bo-worker") for name in seen)


def test_proposer_rejects_unknown_explore_region():
    with pytest.raises(InputError):
        Proposer(AcquisitionSpec("ei"), BOX2, explore="everywhere")
