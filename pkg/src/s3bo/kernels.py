"""Stationary covariance kernels.

All kernels are functions of the scaled distance ``r = ||(x - x') / l||`` where
``l`` holds one lengthscale per input dimension (a single entry means
isotropic).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from s3bo.errors import InputError

FAMILIES = ("matern12", "matern32", "matern52", "sqexp")

_ALIASES = {
    "matern1": "matern12",
    "matern3": "matern32",
    "matern5": "matern52",
    "se": "sqexp",
    "rbf": "sqexp",
    "sq-exp": "sqexp",
}

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)


def _canonical_family(name: str) -> str:
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in FAMILIES:
        raise InputError(f"unknown kernel family {name!r}; expected one of {FAMILIES}")
    return key


@dataclass(frozen=True)
class KernelSpec:
    family: str = "matern52"
    amplitude: float = 1.0
    lengthscales: tuple = field(default=(1.0,))

    def __post_init__(self):
        object.__setattr__(self, "family", _canonical_family(self.family))
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise InputError("lengthscales must be a non-empty vector")
        if not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise InputError(f"lengthscales must be positive, got {ls}")
        amp = float(self.amplitude)
        if not np.isfinite(amp) or amp <= 0:
            raise InputError(f"amplitude must be positive, got {amp}")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "lengthscales", tuple(float(v) for v in ls))

    @property
    def variance(self) -> float:
        """Prior variance ``theta0**2``, the value of k(x, x)."""
        return self.amplitude**2

    @property
    def ard(self) -> bool:
        return len(self.lengthscales) > 1

    def lengthscale_array(self, dim: int) -> np.ndarray:
        ls = np.asarray(self.lengthscales)
        if ls.size == 1:
            return np.full(dim, ls[0])
        if ls.size != dim:
            raise InputError(f"kernel has {ls.size} lengthscales but inputs have {dim} columns")
        return ls

    def replace(self, **changes) -> "KernelSpec":
        values = {"family": self.family, "amplitude": self.amplitude, "lengthscales": self.lengthscales}
        values.update(changes)
        return KernelSpec(**values)


def profile(family: str, r: np.ndarray) -> np.ndarray:
    """Unit-amplitude kernel value as a function of scaled distance."""
    if family == "matern12":
        return np.exp(-r)
    if family == "matern32":
        s = SQRT3 * r
        return (1.0 + s) * np.exp(-s)
    if family == "matern52":
        s = SQRT5 * r
        return (1.0 + s + 5.0 / 3.0 * r**2) * np.exp(-s)
    return np.exp(-0.5 * r**2)


def profile_dr_over_r(family: str, r: np.ndarray) -> np.ndarray:
    """``(dk/dr) / r`` for the unit-amplitude profile.

    Finite at r=0 for every family except Matern-1/2, where the caller must
    mask the r=0 entries (their lengthscale derivative is zero there).
    """
    if family == "matern12":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.exp(-r) / r
        return np.where(r > 0, out, 0.0)
    if family == "matern32":
        return -3.0 * np.exp(-SQRT3 * r)
    if family == "matern52":
        return -5.0 / 3.0 * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    return -np.exp(-0.5 * r**2)


def _as_2d(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise InputError(f"{name} must be a 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError(f"{name} contains non-finite values")
    return X


def scaled_distance(spec: KernelSpec, X, X2) -> np.ndarray:
    X = _as_2d(X)
    X2 = _as_2d(X2, "X2")
    if X.shape[1] != X2.shape[1]:
        raise InputError(f"column mismatch: {X.shape[1]} vs {X2.shape[1]}")
    ls = spec.lengthscale_array(X.shape[1])
    return cdist(X / ls, X2 / ls)


def kernel_matrix(spec: KernelSpec, X, X2=None) -> np.ndarray:
    """Cross-covariance matrix between the rows of ``X`` and ``X2``."""
    if X2 is None:
        X2 = X
    r = scaled_distance(spec, X, X2)
    return spec.variance * profile(spec.family, r)


def kernel_diag(spec: KernelSpec, X) -> np.ndarray:
    """Diagonal of ``kernel_matrix(spec, X, X)`` without building it."""
    X = _as_2d(X)
    return np.full(X.shape[0], spec.variance)


def kernel_eval(spec: KernelSpec, x: Sequence[float], x2: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise InputError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(x2))):
        raise InputError("non-finite input")
    ls = spec.lengthscale_array(x.size)
    r = float(np.sqrt(np.sum(((x - x2) / ls) ** 2)))
    return float(spec.variance * profile(spec.family, np.asarray(r)))


def kernel_matrix_and_grads(spec: KernelSpec, X) -> tuple[np.ndarray, list[np.ndarray]]:
    """Symmetric kernel matrix and its derivatives w.r.t. log-hyperparameters.

    Gradients are ordered ``[d/dlog(amplitude), d/dlog(l_1), ...]`` with one
    lengthscale entry per element of ``spec.lengthscales``.
    """
    X = _as_2d(X)
    dim = X.shape[1]
    ls = spec.lengthscale_array(dim)
    Xs = X / ls
    r = cdist(Xs, Xs)
    K = spec.variance * profile(spec.family, r)
    g = spec.variance * profile_dr_over_r(spec.family, r)
    grads = [2.0 * K]
    if spec.ard:
        for i in range(dim):
            diff2 = (Xs[:, i, None] - Xs[None, :, i]) ** 2
            # dk/dlog l_i = dk/dr * dr/dlog l_i = -(dk/dr / r) * (dx_i / l_i)^2
            grads.append(-g * diff2)
    else:
        grads.append(-g * r**2)
    return K, grads
