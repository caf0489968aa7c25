"""Fitting LSB models by minimizing the exact or Whittle objective."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .levinson import levinson_durbin
from .likelihood import ExactLikConfig, WhittleConfig, make_objective
from .models import Family, LsbModelSpec
from .optimize import OptimConfig, OptimResult, minimize


def sample_acvf(x, max_lag: int) -> np.ndarray:
    """Biased sample autocovariances (divisor ``T``) about zero; the models have mean zero."""
    x = np.asarray(x, dtype=float)
    T = x.size
    n = 1 << int(np.ceil(np.log2(2 * T)))
    F = np.fft.rfft(x, n)
    return np.fft.irfft(F * np.conj(F), n)[: max_lag + 1] / T


def gph_estimate(x, m: int | None = None) -> float:
    """Log-periodogram regression estimate of the memory parameter."""
    x = np.asarray(x, dtype=float)
    T = x.size
    m = m or max(4, int(np.sqrt(T)))
    j = np.arange(1, m + 1)
    lam = 2.0 * np.pi * j / T
    I = np.abs(np.fft.fft(x)[1: m + 1]) ** 2 / (2.0 * np.pi * T)
    reg = -2.0 * np.log(np.abs(2.0 * np.sin(lam / 2.0)))
    reg = reg - reg.mean()
    y = np.log(np.maximum(I, 1e-300))
    return float(reg @ (y - y.mean()) / (reg @ reg))


def default_start(model: LsbModelSpec, x) -> np.ndarray:
    """Start from the stationary submodel fitted by moments.

    Intercepts come from Yule-Walker (AR), log-periodogram regression
    (FD) or zeros (Exp cepstral curves); the scale intercept is the log of
    the implied innovation SD. All other coefficients start at zero.
    """
    x = np.asarray(x, dtype=float)
    beta = np.zeros(model.n_coef)
    idx = model.intercept_index
    g0 = float(sample_acvf(x, 0)[0])
    log_sd = 0.5 * np.log(max(g0, 1e-300))
    if model.family is Family.AR:
        _, v, pacf = levinson_durbin(sample_acvf(x, model.p), model.p)
        pacf = np.clip(pacf, -0.99, 0.99)
        for k in range(model.p):
            beta[idx[k]] = float(model.curves[k].link.forward(pacf[k]))
        log_sd = 0.5 * np.log(max(v[-1], 1e-300))
    elif model.family is Family.FD:
        d = float(np.clip(gph_estimate(x), -0.45, 0.45))
        beta[idx[0]] = float(model.curves[0].link.forward(d))
        log_sd += 0.5 * (2.0 * gammaln(1.0 - d) - gammaln(1.0 - 2.0 * d))
    beta[idx[-1]] = log_sd
    return beta


@dataclass
class FitResult:
    """A fitted model together with the optimizer record."""

    model: LsbModelSpec
    optim: OptimResult
    likelihood: str
    T: int
    free: np.ndarray
    lik_config: object = None
    elapsed: float = 0.0

    @property
    def beta(self) -> np.ndarray:
        return self.model.beta

    @property
    def nll(self) -> float:
        return self.optim.value

    @property
    def converged(self) -> bool:
        return self.optim.converged

    @property
    def n_free(self) -> int:
        return int(np.sum(self.free))


def fit(model: LsbModelSpec, x, likelihood: str = "exact",
        lik_config: ExactLikConfig | WhittleConfig | None = None,
        optim_config: OptimConfig | None = None, start=None, free=None) -> FitResult:
    """Minimize the chosen objective over the coefficients of ``model``.

    Parameters
    ----------
    model : LsbModelSpec
        Template; its bases, links and family define the parameterization.
    likelihood : {'exact', 'whittle'}
    start : array_like, optional
        Full-length start vector; defaults to :func:`default_start`.
    free : array_like of bool, optional
        Mask of coefficients to optimize; the others stay at ``start``.
    """
    t0 = time.perf_counter()
    x = np.asarray(x, dtype=float)
    obj = make_objective(model, x, likelihood, lik_config)
    beta0 = default_start(model, x) if start is None else np.array(start, dtype=float)
    free = np.ones(model.n_coef, bool) if free is None else np.asarray(free, bool)
    if beta0.shape != (model.n_coef,) or free.shape != beta0.shape:
        raise ValueError("start and free must match the coefficient count")
    fixed = beta0.copy()

    def sub(b):
        full = fixed.copy()
        full[free] = b
        return obj(full)

    res = minimize(sub, beta0[free], optim_config)
    full = fixed.copy()
    full[free] = res.beta_hat
    res.beta_hat = full
    return FitResult(model.with_beta(full), res, likelihood, x.size, free,
                     getattr(obj, "cfg", lik_config), time.perf_counter() - t0)
