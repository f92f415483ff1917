"""Closed-form test objectives (all minimized) with optional simulated evaluation cost."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from s3bo.errors import InputError

NAMES = ("zdt1", "zdt2", "zdt3", "sphere", "sphere_general", "hartmann4")

# Standard 4-D Hartmann: first four columns of the 6-D tables.
HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN_A = np.array([
    [10.0, 3.0, 17.0, 3.5],
    [0.05, 10.0, 17.0, 0.1],
    [3.0, 3.5, 1.7, 10.0],
    [17.0, 8.0, 0.05, 10.0],
])
HARTMANN_P = 1e-4 * np.array([
    [1312.0, 1696.0, 5569.0, 124.0],
    [2329.0, 4135.0, 8307.0, 3736.0],
    [2348.0, 1451.0, 3522.0, 2883.0],
    [4047.0, 8828.0, 8732.0, 5743.0],
])
# Global minimum of the above, located by a 10^4-start multistart search.
HARTMANN_MIN_VALUE = -3.134494141222394
HARTMANN_ARGMIN = np.array([0.18739527, 0.19415151, 0.55791778, 0.26477962])


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    D: int = 4
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    delay: tuple | None = None  # (t_lb, t_ub) seconds
    weights: np.ndarray | None = None  # sphere_general: (d_e, D)
    normalize_g: bool = False

    def __post_init__(self):
        name = str(self.name).lower()
        if name not in NAMES:
            raise InputError(f"unknown benchmark {self.name!r}; expected one of {NAMES}")
        object.__setattr__(self, "name", name)
        D = 4 if name == "hartmann4" else int(self.D)
        if name == "hartmann4" and int(self.D) not in (4,):
            raise InputError("hartmann4 is 4-dimensional")
        if name.startswith("zdt") and D < 2:
            raise InputError("ZDT benchmarks need D >= 2")
        if D < 1:
            raise InputError(f"D must be >= 1, got {D}")
        object.__setattr__(self, "D", D)
        lo_default, hi_default = (0.0, 1.0) if name == "hartmann4" else (-1.0, 1.0)
        lo = np.broadcast_to(np.asarray(lo_default if self.lower is None else self.lower, float), (D,)).copy()
        hi = np.broadcast_to(np.asarray(hi_default if self.upper is None else self.upper, float), (D,)).copy()
        if np.any(hi <= lo):
            raise InputError("benchmark bounds must satisfy lower < upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if self.delay is not None:
            t_lb, t_ub = map(float, self.delay)
            if not 0.0 <= t_lb <= t_ub:
                raise InputError(f"delay interval must satisfy 0 <= lb <= ub, got {self.delay}")
            object.__setattr__(self, "delay", (t_lb, t_ub))
        if name == "sphere_general":
            if self.weights is None:
                raise InputError("sphere_general needs a weights matrix")
            W = np.atleast_2d(np.asarray(self.weights, dtype=float))
            if W.shape[1] != D:
                raise InputError(f"weights have {W.shape[1]} columns, expected D={D}")
            object.__setattr__(self, "weights", W)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper


def _zdt_g(spec: BenchmarkSpec, tail_sum: float) -> float:
    if spec.normalize_g or spec.name == "zdt1":
        return 1.0 + 9.0 * (tail_sum / (spec.D - 1)) ** 2
    if spec.name == "zdt2":
        return 1.0 + (9.0 * tail_sum) ** 2
    return 1.0 + 9.0 * tail_sum**2


def value(spec: BenchmarkSpec, x) -> float:
    """Objective value without any simulated delay."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != spec.D:
        raise InputError(f"expected {spec.D} coordinates, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite input")
    name = spec.name
    if name.startswith("zdt"):
        x1 = x[0]
        g = _zdt_g(spec, float(np.sum(x[1:])))
        ratio = x1**2 / g
        if name == "zdt1":
            return float(g * (1.0 - np.sqrt(ratio)))
        if name == "zdt2":
            return float(g * (1.0 - (x1 / g) ** 2))
        return float(g * (1.0 - np.sqrt(ratio) - ratio * np.sin(10.0 * np.pi * x1**2)))
    if name == "sphere":
        return float(np.sum(x) ** 2)
    if name == "sphere_general":
        return float(np.prod((spec.weights @ x) ** 2))
    inner = np.sum(HARTMANN_A * (x[None, :] - HARTMANN_P) ** 2, axis=1)
    return float((1.1 - HARTMANN_ALPHA @ np.exp(-inner)) / 0.839)


def sample_delay(spec: BenchmarkSpec, rng: np.random.Generator | None = None) -> float:
    if spec.delay is None:
        return 0.0
    rng = rng if rng is not None else np.random.default_rng()
    return float(rng.uniform(*spec.delay))


def evaluate(spec: BenchmarkSpec, x, rng: np.random.Generator | None = None) -> float:
    """Objective value, after sleeping for the configured random cost (if any)."""
    y = value(spec, x)
    t = sample_delay(spec, rng)
    if t > 0:
        time.sleep(t)
    return y


def effective_subspace(spec: BenchmarkSpec) -> np.ndarray:
    """Rows spanning the directions the objective depends on (d_e x D)."""
    D = spec.D
    if spec.name.startswith("zdt"):
        e1 = np.zeros(D)
        e1[0] = 1.0
        tail = np.ones(D)
        tail[0] = 0.0
        return np.vstack([e1, tail / np.sqrt(D - 1)])
    if spec.name == "sphere":
        return np.ones((1, D)) / np.sqrt(D)
    if spec.name == "sphere_general":
        return spec.weights.copy()
    raise InputError("hartmann4 has no declared low effective dimension")
