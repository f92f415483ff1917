"""Cholesky with diagonal jitter escalation."""

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from s3bo.errors import NumericalError

JITTER_START = 1e-10
JITTER_MAX = 1e-6


def jittered_cholesky(M: np.ndarray, scale: float, start: float = JITTER_START, stop: float = JITTER_MAX):
    """Lower Cholesky factor of ``M + j*scale*I``, escalating ``j`` by 10x on failure.

    Returns ``(L, jitter)`` where ``jitter`` is the absolute amount added.
    """
    eye = np.eye(M.shape[0])
    j = start
    while j <= stop * (1 + 1e-9):
        try:
            L = cholesky(M + j * scale * eye, lower=True, check_finite=False)
            if np.all(np.isfinite(L)):
                return L, j * scale
        except LinAlgError:
            pass
        j *= 10.0
    try:
        cond = np.linalg.cond(M)
    except LinAlgError:
        cond = np.inf
    raise NumericalError(
        f"Cholesky failed on {M.shape[0]}x{M.shape[0]} matrix after jitter {stop:g}*{scale:g} "
        f"(condition number {cond:.3g})"
    )
