"""Surrogate management for the optimization loop.

Hyperparameters are trained on the true observations only; hallucinated
views are conditioned on with the current hyperparameters. Full multistart
training runs the first time and whenever n crosses a power of two; in
between, a single local search warm-started at the current values keeps the
controller cheap enough not to starve the worker pool. The exact GP is
used below ``exact_below_n`` observations and the sparse GP above it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from s3bo.design import as_box
from s3bo.errors import NumericalError
from s3bo.gp_exact import Dataset, default_bounds, fit_exact, train_hypers_exact
from s3bo.gp_sparse import InducingSet, fit_sparse, sample_inducing, train_sparse
from s3bo.kernels import KernelSpec

log = logging.getLogger(__name__)


@dataclass
class SurrogateSettings:
    family: str = "matern32"
    amplitude: float = 1.0
    lengthscale: tuple = (1.0,)
    ard: bool = True
    exact_below_n: int = 256
    variant: str = "fic"
    num_inducing: int = 300
    objective: str = "elbo"
    restarts: int = 5
    freeze_inducing: bool = False


class Surrogate:
    def __init__(self, settings: SurrogateSettings, bounds, seed: int = 0):
        self.settings = settings
        self.seed = seed
        self.bounds = as_box(bounds)
        dim = self.bounds[0].size
        ls = tuple(np.atleast_1d(np.asarray(settings.lengthscale, dtype=float)))
        if settings.ard and len(ls) == 1:
            ls = ls * dim
        self.spec = KernelSpec(settings.family, settings.amplitude, ls)
        self.noise = 1e-6
        self.mean = 0.0
        self._frozen: InducingSet | None = None
        self._full_level = -1  # floor(log2 n) at the last full multistart

    @property
    def box_width(self) -> float:
        lo, hi = self.bounds
        return float(np.max(hi - lo))

    def uses_exact(self, n: int) -> bool:
        return n < self.settings.exact_below_n

    def inducing(self, n: int, seed) -> InducingSet:
        m = self.settings.num_inducing
        if self.settings.freeze_inducing:
            if self._frozen is None:
                self._frozen = sample_inducing(self.bounds, m, m, [self.seed, 7])
            return InducingSet(self._frozen.Zu[: min(n, m)])
        return sample_inducing(self.bounds, m, n, seed)

    def restarts_for(self, n: int) -> int:
        return self.settings.restarts if max(n, 1).bit_length() - 1 > self._full_level else 1

    def train(self, data: Dataset, seed) -> None:
        """Refresh hyperparameters from the true observations, warm-started at the current values."""
        bounds = default_bounds(data, self.box_width)
        s = self.settings
        restarts = self.restarts_for(data.n)
        self._full_level = max(self._full_level, max(data.n, 1).bit_length() - 1)
        try:
            if self.uses_exact(data.n):
                self.spec, self.noise, self.mean = train_hypers_exact(
                    data, self.spec, self.noise, None, bounds, restarts, seed)
            else:
                model = train_sparse(data, self.spec, self.noise, self.inducing(data.n, seed), s.variant,
                                     s.objective, restarts, seed, None, bounds)
                self.spec, self.noise, self.mean = model.spec, model.noise, model.mean
        except NumericalError as exc:
            log.warning("hyperparameter training failed (%s); keeping previous values", exc)
            self.mean = float(np.mean(data.y))

    def fit(self, view: Dataset, seed):
        """Condition on ``view`` (true plus hallucinated rows) with the current hyperparameters."""
        if self.uses_exact(view.n):
            return fit_exact(view, self.spec, self.noise, self.mean)
        return fit_sparse(view, self.spec, self.noise, self.mean, self.inducing(view.n, seed), self.settings.variant)

    def state(self) -> dict:
        """JSON-ready snapshot of everything ``train`` carries between calls."""
        return {"family": self.spec.family, "amplitude": self.spec.amplitude,
                "lengthscales": list(self.spec.lengthscales), "noise": self.noise, "mean": self.mean,
                "full_level": self._full_level}

    def load_state(self, state: dict) -> None:
        self.spec = KernelSpec(state["family"], state["amplitude"], tuple(state["lengthscales"]))
        self.noise, self.mean = float(state["noise"]), float(state["mean"])
        self._full_level = int(state["full_level"])

    def inducing_count(self, n: int) -> int:
        return n if self.uses_exact(n) else min(n, self.settings.num_inducing)
