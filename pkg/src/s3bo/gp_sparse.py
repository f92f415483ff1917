"""Low-rank sparse GP approximations (SoR, DTC, FIC) with fixed inducing inputs.

Everything is expressed through ``V = Luu^{-1} Kuf`` so that ``Qff = V^T V``
and the m x m matrix ``B = I + V Lambda^{-1} V^T`` carries all the
Sherman-Morrison-Woodbury algebra. Fitting costs O(n m^2); prediction
costs O(m) for the mean and O(m^2) for the variance per query.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from s3bo._linalg import jittered_cholesky
from s3bo.design import as_box, latin_hypercube
from s3bo.errors import InputError
from s3bo.gp_exact import LOG_2PI, Dataset, HyperBounds, default_bounds, log_bounds, multistart, pack, unpack
from s3bo.kernels import KernelSpec, kernel_matrix

VARIANTS = ("sor", "dtc", "fic")
OBJECTIVES = ("elbo", "lml")
LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True)
class InducingSet:
    Zu: np.ndarray

    def __post_init__(self):
        Zu = np.atleast_2d(np.asarray(self.Zu, dtype=float))
        if Zu.shape[0] < 1:
            raise InputError("inducing set must contain at least one point")
        object.__setattr__(self, "Zu", Zu)

    @property
    def m(self) -> int:
        return self.Zu.shape[0]


def sample_inducing(bounds, m: int, n_data: int, seed) -> InducingSet:
    """``min(n_data, m)`` inducing inputs by Latin hypercube sampling over ``bounds``."""
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    as_box(bounds)
    k = max(1, min(int(n_data), int(m)))
    return InducingSet(latin_hypercube(bounds, k, seed))


def _check_variant(variant: str) -> str:
    v = str(variant).lower()
    if v not in VARIANTS:
        raise InputError(f"unknown sparse variant {variant!r}; expected one of {VARIANTS}")
    return v


def _chol_kuu(spec: KernelSpec, Zu: np.ndarray):
    return jittered_cholesky(kernel_matrix(spec, Zu), spec.variance)


def q_matrix(spec: KernelSpec, A, U, B) -> np.ndarray:
    """``K_{A,U} K_{U,U}^{-1} K_{U,B}`` via a Cholesky solve against ``K_{U,U}``."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    Luu, _ = _chol_kuu(spec, U)
    Va = solve_triangular(Luu, kernel_matrix(spec, U, A), lower=True, check_finite=False)
    Vb = solve_triangular(Luu, kernel_matrix(spec, U, B), lower=True, check_finite=False)
    return Va.T @ Vb


@dataclass(frozen=True)
class SparseGpModel:
    spec: KernelSpec
    noise: float
    mean: float
    Zu: np.ndarray
    variant: str
    Luu: np.ndarray  # chol(Kuu + jitter)
    LB: np.ndarray  # chol(I + V Lambda^{-1} V^T); Sigma = Luu^{-T} B^{-1} Luu^{-1}
    lam: np.ndarray  # Lambda diagonal, length n
    weight: np.ndarray  # Sigma Kuf Lambda^{-1} (y - mean), length m
    V: np.ndarray  # Luu^{-1} Kuf, m x n
    residual: np.ndarray  # y - mean
    logdet: float  # log|Qff + Lambda|
    quad: float  # r^T (Qff + Lambda)^{-1} r

    @property
    def n(self) -> int:
        return self.residual.shape[0]

    @property
    def m(self) -> int:
        return self.Zu.shape[0]

    def predict(self, Xq):
        return predict_sparse(self, Xq)

    def sigma(self) -> np.ndarray:
        """Dense ``[Kuu + Kuf Lambda^{-1} Kfu]^{-1}`` (m x m); for inspection and tests."""
        Li = solve_triangular(self.Luu, np.eye(self.m), lower=True, check_finite=False)
        return Li.T @ cho_solve((self.LB, True), Li, check_finite=False)

    def apply_inverse(self, R) -> np.ndarray:
        """``[Qff + Lambda]^{-1} R`` by the Woodbury identity, O(n m^2)."""
        R = np.asarray(R, dtype=float)
        vec = R.ndim == 1
        R = R[:, None] if vec else R
        lr = R / self.lam[:, None]
        inner = cho_solve((self.LB, True), self.V @ lr, check_finite=False)
        out = lr - (self.V.T @ inner) / self.lam[:, None]
        return out[:, 0] if vec else out


def _lowrank_terms(V: np.ndarray, lam: np.ndarray, r: np.ndarray):
    """Cholesky of B plus log|V^T V + Lambda| and r^T (V^T V + Lambda)^{-1} r."""
    Vl = V / lam
    B = np.eye(V.shape[0]) + Vl @ V.T
    LB, _ = jittered_cholesky(B, 1.0)
    c = solve_triangular(LB, Vl @ r, lower=True, check_finite=False)
    logdet = float(np.sum(np.log(lam)) + 2.0 * np.sum(np.log(np.diag(LB))))
    quad = float(r @ (r / lam) - c @ c)
    return LB, c, logdet, quad


def fit_sparse(
    data: Dataset,
    spec: KernelSpec,
    noise: float,
    mean: float | None,
    inducing: InducingSet,
    variant: str = "fic",
) -> SparseGpModel:
    variant = _check_variant(variant)
    if data.n == 0:
        raise InputError("cannot fit a GP to an empty dataset")
    if noise < 0:
        raise InputError(f"noise variance must be nonnegative, got {noise}")
    if not isinstance(inducing, InducingSet):
        inducing = InducingSet(inducing)
    Zu = inducing.Zu[: min(inducing.m, data.n)]
    if Zu.shape[1] != data.dim:
        raise InputError(f"inducing inputs have {Zu.shape[1]} columns, data has {data.dim}")
    if mean is None:
        mean = float(np.mean(data.y))
    Luu, _ = _chol_kuu(spec, Zu)
    V = solve_triangular(Luu, kernel_matrix(spec, Zu, data.Z), lower=True, check_finite=False)
    if variant == "fic":
        qdiag = np.einsum("ij,ij->j", V, V)
        lam = np.maximum(spec.variance - qdiag, 0.0) + noise
    else:
        lam = np.full(data.n, float(noise))
    lam = np.maximum(lam, LAMBDA_FLOOR)
    r = data.y - mean
    LB, c, logdet, quad = _lowrank_terms(V, lam, r)
    weight = solve_triangular(Luu.T, solve_triangular(LB.T, c, lower=False, check_finite=False),
                              lower=False, check_finite=False)
    return SparseGpModel(spec, float(noise), float(mean), Zu.copy(), variant, Luu, LB, lam, weight, V, r,
                         logdet, quad)


def predict_sparse(model: SparseGpModel, Xq):
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[1] != model.Zu.shape[1]:
        raise InputError(f"query has {Xq.shape[1]} columns, model has {model.Zu.shape[1]}")
    Ksu = kernel_matrix(model.spec, Xq, model.Zu)
    mean = model.mean + Ksu @ model.weight
    a = solve_triangular(model.Luu, Ksu.T, lower=True, check_finite=False)
    b = solve_triangular(model.LB, a, lower=True, check_finite=False)
    explained = np.einsum("ij,ij->j", b, b)  # K*u Sigma Ku*
    if model.variant == "sor":
        var = explained
    else:
        var = model.spec.variance - np.einsum("ij,ij->j", a, a) + explained
    return mean, np.maximum(var, 0.0)


def sparse_log_marginal_likelihood(model: SparseGpModel) -> float:
    return float(-0.5 * model.n * LOG_2PI - 0.5 * model.logdet - 0.5 * model.quad)


def elbo(model: SparseGpModel) -> float:
    """Variational lower bound: log N(y | m, noise*I + Qff) - Tr(Kff - Qff) / (2 noise)."""
    if model.noise <= 0:
        raise InputError("ELBO requires a strictly positive noise variance")
    lam = np.full(model.n, model.noise)
    _, _, logdet, quad = _lowrank_terms(model.V, lam, model.residual)
    qdiag = np.einsum("ij,ij->j", model.V, model.V)
    trace_gap = float(np.sum(model.spec.variance - qdiag))
    return float(-0.5 * model.n * LOG_2PI - 0.5 * logdet - 0.5 * quad - 0.5 * trace_gap / model.noise)


def sparse_objective(model: SparseGpModel, objective: str) -> float:
    return elbo(model) if objective == "elbo" else sparse_log_marginal_likelihood(model)


def train_sparse(
    data: Dataset,
    init: KernelSpec,
    noise_init: float,
    inducing: InducingSet,
    variant: str = "fic",
    objective: str = "elbo",
    restarts: int = 5,
    seed=0,
    mean: float | None = None,
    bounds: HyperBounds | None = None,
) -> SparseGpModel:
    """Fit hyperparameters (not inducing inputs) by maximizing the ELBO or sparse LML."""
    objective = str(objective).lower()
    if objective not in OBJECTIVES:
        raise InputError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    variant = _check_variant(variant)
    if data.n == 0:
        raise InputError("cannot train on an empty dataset")
    mean = float(np.mean(data.y)) if mean is None else float(mean)
    bounds = bounds or default_bounds(data)
    bnds = log_bounds(bounds, len(init.lengthscales))

    def negative(theta):
        spec, noise = unpack(theta, init.family)
        return -sparse_objective(fit_sparse(data, spec, noise, mean, inducing, variant), objective)

    theta, _ = multistart(negative, pack(init, max(noise_init, 1e-300)), bnds, restarts, seed, jac=False)
    spec, noise = unpack(theta, init.family)
    return fit_sparse(data, spec, noise, mean, inducing, variant)
