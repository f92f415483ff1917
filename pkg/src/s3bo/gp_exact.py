"""Dense Gaussian-process regression.

Used as the reference model for the sparse approximations and as the
surrogate while the dataset is small.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from s3bo._linalg import jittered_cholesky
from s3bo.errors import InputError, NumericalError
from s3bo.kernels import KernelSpec, kernel_matrix, kernel_matrix_and_grads

log = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class Dataset:
    """Observed (embedded) inputs and outputs with a running incumbent."""

    Z: np.ndarray
    y: np.ndarray
    mode: str = "minimize"
    best_index: int = -1
    best_value: float = np.nan

    def __post_init__(self):
        if self.mode not in ("minimize", "maximize"):
            raise InputError(f"mode must be 'minimize' or 'maximize', got {self.mode!r}")
        self.Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.Z.shape[0] != self.y.shape[0]:
            raise InputError(f"{self.Z.shape[0]} inputs but {self.y.shape[0]} outputs")
        if not (np.all(np.isfinite(self.Z)) and np.all(np.isfinite(self.y))):
            raise InputError("dataset contains non-finite values")
        self._recompute_incumbent()

    @classmethod
    def empty(cls, dim: int, mode: str = "minimize") -> "Dataset":
        return cls(np.empty((0, dim)), np.empty(0), mode=mode)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def _better(self, a: float, b: float) -> bool:
        return a < b if self.mode == "minimize" else a > b

    def _recompute_incumbent(self):
        if self.n == 0:
            self.best_index, self.best_value = -1, np.nan
            return
        idx = int(np.argmin(self.y) if self.mode == "minimize" else np.argmax(self.y))
        self.best_index, self.best_value = idx, float(self.y[idx])

    def append(self, z, y: float) -> None:
        z = np.asarray(z, dtype=float).ravel()
        if z.size != self.dim:
            raise InputError(f"point has {z.size} coordinates, dataset has {self.dim}")
        if not (np.all(np.isfinite(z)) and np.isfinite(y)):
            raise InputError("cannot append non-finite observation")
        self.Z = np.vstack([self.Z, z])
        self.y = np.append(self.y, float(y))
        if self.best_index < 0 or self._better(float(y), self.best_value):
            self.best_index, self.best_value = self.n - 1, float(y)

    def copy(self) -> "Dataset":
        return Dataset(self.Z.copy(), self.y.copy(), mode=self.mode)


@dataclass(frozen=True)
class ExactGpModel:
    spec: KernelSpec
    noise: float
    mean: float
    Z: np.ndarray
    y: np.ndarray
    L: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def predict(self, Xq):
        return predict_exact(self, Xq)


def fit_exact(data: Dataset, spec: KernelSpec, noise: float, mean: float | None = None) -> ExactGpModel:
    """Factorize ``K + noise*I`` once; predictions then reuse the factor."""
    if data.n == 0:
        raise InputError("cannot fit a GP to an empty dataset")
    if noise < 0:
        raise InputError(f"noise variance must be nonnegative, got {noise}")
    if mean is None:
        mean = float(np.mean(data.y))
    K = kernel_matrix(spec, data.Z)
    K[np.diag_indices_from(K)] += noise
    L, jitter = jittered_cholesky(K, spec.variance)
    alpha = cho_solve((L, True), data.y - mean, check_finite=False)
    return ExactGpModel(spec, float(noise), float(mean), data.Z.copy(), data.y.copy(), L, alpha, jitter)


def predict_exact(model: ExactGpModel, Xq):
    """Posterior mean and (clamped) variance at the rows of ``Xq``."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != model.Z.shape[1]:
        raise InputError(f"query has {Xq.shape[1]} columns, model trained on {model.Z.shape[1]}")
    Ks = kernel_matrix(model.spec, Xq, model.Z)
    mean = model.mean + Ks @ model.alpha
    v = solve_triangular(model.L, Ks.T, lower=True, check_finite=False)
    var = model.spec.variance - np.sum(v**2, axis=0)
    return mean, np.maximum(var, 0.0)


def log_marginal_likelihood(model: ExactGpModel) -> float:
    r = model.y - model.mean
    logdet = 2.0 * np.sum(np.log(np.diag(model.L)))
    return float(-0.5 * model.n * LOG_2PI - 0.5 * logdet - 0.5 * r @ model.alpha)


# --- hyperparameter training -------------------------------------------------


@dataclass(frozen=True)
class HyperBounds:
    """Box constraints (natural scale) for amplitude, lengthscales and noise variance."""

    amplitude: tuple = (1e-2, 1e2)
    lengthscale: tuple = (1e-3, 1e1)
    noise: tuple = (1e-8, 1.0)

    def __post_init__(self):
        for name in ("amplitude", "lengthscale", "noise"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise InputError(f"{name} bounds must be positive and ordered, got {(lo, hi)}")


def default_bounds(data: Dataset, box_width: float | None = None) -> HyperBounds:
    """Search ranges scaled to the data: amplitude by std(y), lengthscale by domain width, noise by var(y)."""
    std = float(np.std(data.y)) if data.n > 1 else 0.0
    if not np.isfinite(std) or std <= 0:
        std = max(abs(float(data.y[0])) if data.n else 1.0, 1.0)
    if box_width is None:
        spread = np.ptp(data.Z, axis=0) if data.n > 1 else np.zeros(data.dim)
        box_width = float(np.max(spread)) if np.max(spread, initial=0.0) > 0 else 1.0
    return HyperBounds(
        amplitude=(1e-2 * std, 1e2 * std),
        lengthscale=(1e-3 * box_width, 1e1 * box_width),
        noise=(1e-6 * std**2, std**2),
    )


def pack(spec: KernelSpec, noise: float) -> np.ndarray:
    return np.log(np.concatenate([[spec.amplitude], spec.lengthscales, [noise]]))


def unpack(theta: np.ndarray, family: str) -> tuple[KernelSpec, float]:
    e = np.exp(theta)
    return KernelSpec(family, e[0], tuple(e[1:-1])), float(e[-1])


def log_bounds(bounds: HyperBounds, n_ls: int) -> list[tuple[float, float]]:
    lo_hi = [bounds.amplitude] + [bounds.lengthscale] * n_ls + [bounds.noise]
    return [(np.log(lo), np.log(hi)) for lo, hi in lo_hi]


def neg_lml_and_grad(theta: np.ndarray, family: str, Z: np.ndarray, r: np.ndarray):
    """Negative log marginal likelihood and its gradient in log-hyperparameter space."""
    spec, noise = unpack(theta, family)
    K, grads = kernel_matrix_and_grads(spec, Z)
    K[np.diag_indices_from(K)] += noise
    L, _ = jittered_cholesky(K, spec.variance)
    alpha = cho_solve((L, True), r, check_finite=False)
    n = r.shape[0]
    lml = -0.5 * n * LOG_2PI - np.sum(np.log(np.diag(L))) - 0.5 * r @ alpha
    Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Kinv
    g = [0.5 * np.sum(W * dK) for dK in grads]
    g.append(0.5 * noise * np.trace(W))
    return -lml, -np.asarray(g)


def multistart(objective, theta0: np.ndarray, bnds, restarts: int, seed, jac: bool):
    """Minimize ``objective`` from ``theta0`` plus random log-uniform starts.

    Returns ``(theta, value)`` of the best point seen, which is never worse
    than ``theta0`` itself when that evaluates successfully.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bnds])
    hi = np.array([b[1] for b in bnds])
    starts = [np.clip(theta0, lo, hi)]
    for _ in range(max(restarts, 1) - 1):
        starts.append(rng.uniform(lo, hi))

    def value(t):
        out = objective(t)
        return out[0] if jac else out

    best_theta, best_val = None, np.inf
    try:
        v0 = value(starts[0])
        if np.isfinite(v0):
            best_theta, best_val = starts[0].copy(), v0
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError):
        pass
    for start in starts:
        try:
            res = minimize(objective, start, jac=jac, method="L-BFGS-B", bounds=bnds)
        except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.debug("restart failed: %s", exc)
            continue
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = np.clip(res.x, lo, hi), float(res.fun)
    if best_theta is None:
        raise NumericalError("all hyperparameter restarts failed")
    return best_theta, best_val


def train_hypers_exact(
    data: Dataset,
    init: KernelSpec,
    noise_init: float,
    mean_init: float | None = None,
    bounds: HyperBounds | None = None,
    restarts: int = 5,
    seed=0,
):
    """Maximize the log marginal likelihood over amplitude, lengthscales and noise.

    The constant mean is held at ``mean_init`` (sample mean when omitted).
    Returns ``(spec, noise, mean)``.
    """
    if data.n == 0:
        raise InputError("cannot train on an empty dataset")
    mean = float(np.mean(data.y)) if mean_init is None else float(mean_init)
    bounds = bounds or default_bounds(data)
    n_ls = len(init.lengthscales)
    bnds = log_bounds(bounds, n_ls)
    r = data.y - mean
    theta0 = pack(init, max(noise_init, 1e-300))

    def objective(theta):
        return neg_lml_and_grad(theta, init.family, data.Z, r)

    theta, _ = multistart(objective, theta0, bnds, restarts, seed, jac=True)
    spec, noise = unpack(theta, init.family)
    return spec, noise, mean
