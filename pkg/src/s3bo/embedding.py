"""Gaussian random embeddings from a low-dimensional search box into the problem box."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from s3bo.design import as_box
from s3bo.errors import InputError, NumericalError


@dataclass(frozen=True)
class Embedding:
    """Random matrix ``A`` (D x d) and the original box ``[x_lb, x_ub]``.

    The search box is ``[-sqrt(d), sqrt(d)]^d``.
    """

    A: np.ndarray
    x_lb: np.ndarray
    x_ub: np.ndarray
    seed: int | None = None

    @property
    def D(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def half_width(self) -> float:
        return float(np.sqrt(self.d))

    @property
    def z_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        h = self.half_width
        return np.full(self.d, -h), np.full(self.d, h)


def _check_dims(D: int, d: int):
    if not (int(D) == D and int(d) == d and D >= d >= 1):
        raise InputError(f"need D >= d >= 1, got D={D}, d={d}")


def draw_embedding(D: int, d: int, x_lb, x_ub, seed: int) -> Embedding:
    """Gaussian embedding with i.i.d. N(0, 1) entries from a seeded PCG64 stream."""
    _check_dims(D, d)
    lo, hi = as_box((np.broadcast_to(x_lb, (D,)), np.broadcast_to(x_ub, (D,))))
    A = np.random.default_rng(seed).standard_normal((D, d))
    return Embedding(A, lo.copy(), hi.copy(), seed)


def identity_embedding(x_lb, x_ub) -> Embedding:
    """No dimensionality reduction: ``A = d * I`` so that ``(1/d) A z = z``."""
    lo, hi = as_box((x_lb, x_ub))
    d = lo.size
    return Embedding(d * np.eye(d), lo.copy(), hi.copy(), None)


def embed_unclamped(e: Embedding, z) -> np.ndarray:
    """Affine image of ``z`` in problem coordinates before projection onto the box.

    ``w = A z / d`` is mapped from ``[-sqrt(d), sqrt(d)]`` onto each
    ``[x_lb_i, x_ub_i]``. Works row-wise for a 2-D ``z``.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != e.d:
        raise InputError(f"z has {z.shape[-1]} coordinates, embedding expects {e.d}")
    w = z @ e.A.T / e.d
    h = e.half_width
    return e.x_lb + (w + h) / (2.0 * h) * (e.x_ub - e.x_lb)


def embed_to_x(e: Embedding, z) -> np.ndarray:
    """Embed, rescale to the problem box, and project (componentwise clamp)."""
    return np.clip(embed_unclamped(e, z), e.x_lb, e.x_ub)


def clamped_fraction(e: Embedding, z) -> float:
    """Fraction of coordinates that the box projection had to move."""
    raw = embed_unclamped(e, z)
    return float(np.mean((raw < e.x_lb) | (raw > e.x_ub)))


def mc_bound_probability(d: int, n_samples: int = 10**6, seed: int = 0, scaled: bool = True,
                         interval: str = "sqrt_d", block: int = 2**16) -> float:
    """Monte-Carlo probability that one embedded coordinate lands inside the target interval.

    Each sample draws ``z ~ U[-sqrt(d), sqrt(d)]^d`` and a fresh Gaussian row
    ``a`` of ``A``; the coordinate is ``a.z / d`` (scaled) or ``a.z``
    (unscaled). ``interval`` is ``"sqrt_d"`` for ``[-sqrt(d), sqrt(d)]`` or
    ``"unit"`` for ``[-1, 1]``. Samples are drawn in blocks of ``block``;
    keep it fixed for bit-reproducible results.
    """
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    if n_samples < 10**4:
        raise InputError(f"need at least 1e4 samples, got {n_samples}")
    if interval not in ("sqrt_d", "unit"):
        raise InputError(f"unknown interval {interval!r}")
    rng = np.random.default_rng(seed)
    h = np.sqrt(d)
    bound = h if interval == "sqrt_d" else 1.0
    hits = 0
    remaining = int(n_samples)
    while remaining:
        k = min(block, remaining)
        z = rng.uniform(-h, h, size=(k, d))
        a = rng.standard_normal((k, d))
        x = np.einsum("ij,ij->i", a, z)
        if scaled:
            x /= d
        hits += int(np.count_nonzero(np.abs(x) <= bound))
        remaining -= k
    return hits / n_samples


def subspace_witness(T, e: Embedding, x_top) -> np.ndarray:
    """Least-squares ``z`` with ``T^T (A z) = T^T x_top``.

    ``T`` (D x d_e) spans the effective subspace. Certifies that the embedding
    reaches the effective-subspace component of ``x_top``.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[0] != e.D:
        T = T.T
    x_top = np.asarray(x_top, dtype=float).ravel()
    if T.shape[1] > e.d:
        raise InputError(f"effective dimension {T.shape[1]} exceeds embedding dimension {e.d}")
    M = T.T @ e.A  # d_e x d
    if np.linalg.matrix_rank(M) < T.shape[1]:
        raise NumericalError("T^T A is rank deficient")
    z, *_ = np.linalg.lstsq(M, T.T @ x_top, rcond=None)
    return z


def random_projection(X, d: int, seed: int) -> np.ndarray:
    """Rows of ``X`` (n x D) projected by ``(1/sqrt(d)) A^T x`` with a fresh Gaussian ``A``.

    Unlike an :class:`Embedding` there is no ``D >= d`` restriction, which the
    distance-preservation regime (``d`` of order ``log n / eps^2``) can violate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if d < 1:
        raise InputError(f"d must be >= 1, got {d}")
    A = np.random.default_rng(seed).standard_normal((X.shape[1], int(d)))
    return X @ A / np.sqrt(d)
