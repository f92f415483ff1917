"""Latin hypercube designs over axis-aligned boxes."""

import numpy as np
from scipy.stats import qmc

from s3bo.errors import InputError


def as_box(bounds) -> tuple[np.ndarray, np.ndarray]:
    """Normalize ``(lower, upper)`` into two float vectors and validate them."""
    lo, hi = bounds
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or lo.ndim != 1:
        raise InputError(f"bounds shape mismatch: {lo.shape} vs {hi.shape}")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise InputError("bounds must be finite")
    if np.any(hi <= lo):
        raise InputError("degenerate box: every upper bound must exceed its lower bound")
    return lo, hi


def latin_hypercube(bounds, k: int, seed) -> np.ndarray:
    """``k`` points with exactly one point per equal-width stratum in every coordinate."""
    lo, hi = as_box(bounds)
    if k < 1:
        raise InputError(f"need at least one sample, got {k}")
    sampler = qmc.LatinHypercube(d=lo.size, seed=np.random.default_rng(seed))
    return qmc.scale(sampler.random(k), lo, hi)
