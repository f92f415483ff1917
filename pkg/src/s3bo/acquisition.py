"""Acquisition functions and their inner maximization over a box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from s3bo.design import as_box, latin_hypercube
from s3bo.errors import InputError

KINDS = ("pi", "ei", "ucb", "variance")
_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "ei"
    delta: float = 0.1
    mode: str = "minimize"

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind == "posteriorvariance":
            kind = "variance"
        if kind not in KINDS:
            raise InputError(f"unknown acquisition {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 < self.delta < 1.0:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        if self.mode not in ("minimize", "maximize"):
            raise InputError(f"mode must be 'minimize' or 'maximize', got {self.mode!r}")


def _sign(mode: str) -> float:
    return 1.0 if mode == "maximize" else -1.0


def gamma(mu, sigma, f_best, mode: str = "maximize"):
    """Standardized improvement; larger is more promising in either mode."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise InputError("gamma requires sigma > 0")
    return _sign(mode) * (np.asarray(mu, dtype=float) - f_best) / sigma


def kappa(n: int, d: int, delta: float = 0.1) -> float:
    """UCB exploration weight sqrt(nu * gamma_n) with nu = 1."""
    if n < 1:
        raise InputError(f"UCB needs n >= 1, got {n}")
    gamma_n = 2.0 * np.log(n ** (d / 2.0 + 2.0) * np.pi**2 / (3.0 * delta))
    return float(np.sqrt(gamma_n))


def acquisition_eval(spec: AcquisitionSpec, mu, sigma, f_best: float, n: int = 1, d: int = 1):
    """Acquisition value at posterior mean ``mu`` and standard deviation ``sigma``.

    Vectorized over ``mu``/``sigma``. Where ``sigma == 0`` PI and EI are 0 and
    UCB reduces to the (sign-adjusted) mean.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(np.isnan(mu)) or np.any(np.isnan(sigma)) or np.isnan(f_best):
        raise InputError("NaN passed to acquisition")
    if np.any(sigma < 0):
        raise InputError("sigma must be nonnegative")
    s = _sign(spec.mode)
    if spec.kind == "variance":
        return sigma**2
    if spec.kind == "ucb":
        return s * mu + kappa(n, d, spec.delta) * sigma
    pos = sigma > 0
    safe = np.where(pos, sigma, 1.0)
    diff = s * (mu - f_best)
    with np.errstate(over="ignore", divide="ignore"):
        g = diff / safe  # may overflow to +-inf for tiny sigma
        if spec.kind == "pi":
            return np.where(pos, ndtr(g), 0.0)
        # diff * Phi(g) instead of sigma * g * Phi(g) stays finite when g is infinite
        return np.where(pos, diff * ndtr(g) + safe * np.exp(-0.5 * g * g) / _SQRT_2PI, 0.0)


def model_outputs(model) -> np.ndarray:
    if hasattr(model, "y"):
        return np.asarray(model.y)
    return np.asarray(model.residual) + model.mean


def acquisition_on(model, spec: AcquisitionSpec, Z, f_best: float, n: int):
    mu, var = model.predict(Z)
    return acquisition_eval(spec, mu, np.sqrt(var), f_best, n, np.shape(Z)[1])


def pattern_search(score, starts: np.ndarray, bounds, max_iter: int = 100, tol: float = 1e-4,
                   initial_step: float = 0.1):
    """Bounded coordinate-wise pattern search run in lockstep from every start.

    ``score`` maps a (k, d) array to k values to maximize. Steps are fractions
    of the box width, halved whenever no coordinate move improves, and a
    start is frozen once its step drops below ``tol``. Returns the final
    points and their scores.
    """
    lo, hi = as_box(bounds)
    width = hi - lo
    X = np.clip(np.array(starts, dtype=float), lo, hi)
    k, d = X.shape
    vals = np.asarray(score(X), dtype=float)
    step = np.full(k, initial_step)
    eye = np.eye(d)
    moves = np.concatenate([eye, -eye])  # (2d, d)
    for _ in range(max_iter):
        active = np.flatnonzero(step >= tol)
        if active.size == 0:
            break
        cand = X[active, None, :] + step[active, None, None] * moves[None] * width
        cand = np.clip(cand, lo, hi).reshape(-1, d)
        cv = np.asarray(score(cand), dtype=float).reshape(active.size, 2 * d)
        j = np.argmax(cv, axis=1)
        best = cv[np.arange(active.size), j]
        better = best > vals[active]
        moved = active[better]
        X[moved] = cand.reshape(active.size, 2 * d, d)[better, j[better]]
        vals[moved] = best[better]
        step[active[~better]] *= 0.5
    return X, vals


def maximize_acquisition(
    model,
    spec: AcquisitionSpec,
    bounds,
    budget: int = 20,
    seed=0,
    f_best: float | None = None,
    n: int | None = None,
    extra_starts=None,
    pool_factor: int = 10,
) -> np.ndarray:
    """Multi-start pattern search for the acquisition maximizer within ``bounds``.

    ``budget`` starts are the best points of a Latin hypercube pool of
    ``pool_factor * budget`` candidates plus any ``extra_starts`` (e.g. the
    incumbent). Deterministic given ``seed``; ties go to the lowest start.
    """
    if budget < 1:
        raise InputError(f"budget must be >= 1, got {budget}")
    lo, hi = as_box(bounds)
    if f_best is None or n is None:
        y = model_outputs(model)
        if f_best is None:
            f_best = float(np.min(y) if spec.mode == "minimize" else np.max(y))
        if n is None:
            n = y.size

    def score(Z):
        return acquisition_on(model, spec, Z, f_best, max(int(n), 1))

    return maximize_score(score, (lo, hi), budget, seed, extra_starts, pool_factor)


def maximize_score(score, bounds, budget: int = 20, seed=0, extra_starts=None, pool_factor: int = 10) -> np.ndarray:
    """Pattern-search maximizer of an arbitrary vectorized ``score`` from LHS-pool starts."""
    lo, hi = as_box(bounds)
    pool = latin_hypercube((lo, hi), max(budget, pool_factor * budget), seed)
    pool_vals = score(pool)
    order = np.argsort(-pool_vals, kind="stable")[:budget]
    starts = pool[np.sort(order)]
    if extra_starts is not None and len(extra_starts):
        starts = np.vstack([starts, np.atleast_2d(extra_starts)])
    X, vals = pattern_search(score, starts, (lo, hi))
    return X[int(np.argmax(vals))].copy()


def relevant_variance(model, Z, beta: float, threshold: float, mode: str = "minimize"):
    """Posterior variance inside the relevant region, a negative gap outside it.

    The region holds the points whose optimistic bound ``mu -/+ beta*sigma``
    beats ``threshold`` (the best pessimistic bound among the data), so
    exploration stays where the optimum can still be. Outside, the score is
    minus the shortfall, which steers local search back toward the region.
    """
    mu, var = model.predict(Z)
    sd = np.sqrt(var)
    s = _sign(mode)
    gap = threshold - (s * mu + beta * sd)  # > 0 means the optimistic bound cannot win
    return np.where(gap <= 0, var, -gap)
