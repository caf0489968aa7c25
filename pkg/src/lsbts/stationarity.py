"""Generalized likelihood-ratio test of weak stationarity.

Under the null every non-constant basis coefficient is zero, so each curve
reduces to its intercept and the process is stationary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .estimation import FitResult, default_start, fit
from .models import LsbModelSpec


class OptimizationFailure(RuntimeError):
    """The restricted fit beat the full fit by more than optimizer noise."""


def chisq_sf(x: float, df: int) -> float:
    """Chi-squared survival function ``Q(df/2, x/2)``."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x <= 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * x))


@dataclass
class TestResult:
    __test__ = False  # not a pytest class

    lam: float
    df: int
    p_value: float
    restricted: FitResult
    full: FitResult
    raw_lam: float = 0.0

    @property
    def converged(self) -> bool:
        return self.restricted.converged and self.full.converged

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "df": self.df, "p_value": self.p_value,
                "converged": self.converged, "nll_restricted": self.restricted.nll,
                "nll_full": self.full.nll, "T": self.full.T}


def test_stationarity(model: LsbModelSpec, x, likelihood: str = "exact", lik_config=None,
                      optim_config=None) -> TestResult:
    """Fit the intercept-only and full models and compare.

    ``Lambda = 2 T (L_restricted - L_full)`` is referred to chi-squared with
    ``b - J`` degrees of freedom. The restricted solution seeds the full fit.
    """
    b, J = model.n_coef, model.J
    if b <= J:
        raise ValueError("the template has no non-constant coefficients to test")
    x = np.asarray(x, dtype=float)
    free = np.zeros(b, bool)
    free[model.intercept_index] = True
    restricted = fit(model, x, likelihood, lik_config, optim_config,
                     start=default_start(model, x), free=free)
    full = fit(model, x, likelihood, lik_config, optim_config, start=restricted.beta)
    raw = 2.0 * x.size * (restricted.nll - full.nll)
    if raw < -1e-6:
        raise OptimizationFailure(f"restricted fit is better than the full fit (Lambda={raw:.3g})")
    lam = max(0.0, raw)
    return TestResult(lam, b - J, chisq_sf(lam, b - J), restricted, full, raw)


test_stationarity.__test__ = False
