"""h-step forecasts from a fitted LSB model.

Curves are not extrapolated: beyond the sample the local model is frozen
at ``u = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtri

from .levinson import _psi_weights, dense_cov_at
from .likelihood import default_truncation
from .models import Family, LsbModelSpec, SpectralField


@dataclass
class Forecast:
    h: int
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def rows(self):
        for k in range(self.h):
            yield k + 1, self.mean[k], self.sd[k], self.lower[k], self.upper[k]


def _conditional(S: np.ndarray, n_past: int, x_past: np.ndarray):
    """Gaussian conditional mean and variances of the trailing block."""
    Spp = S[:n_past, :n_past]
    Sfp = S[n_past:, :n_past]
    cf = cho_factor(Spp, lower=True)
    mean = Sfp @ cho_solve(cf, x_past)
    var = np.diag(S[n_past:, n_past:]) - np.einsum("ij,ji->i", Sfp, cho_solve(cf, Sfp.T))
    return mean, np.maximum(var, 0.0)


def forecast(model: LsbModelSpec, x, h: int, lookback: int | None = None,
             level: float = 0.95, dense: bool = False) -> Forecast:
    """Forecast ``X_{T+1..T+h}``.

    AR models iterate the local recursion at ``u = 1`` and accumulate the
    variance from the MA(inf) weights. Other families condition on the
    last ``lookback`` observations under the stationary model frozen at
    ``u = 1``. With ``dense=True`` the forecast conditions on the whole
    sample under the full model covariance, with curves held at ``u = 1``
    for future times.
    """
    if h < 1:
        raise ValueError("horizon h must be >= 1")
    x = np.asarray(x, dtype=float)
    T = x.size
    field_ = SpectralField(model)
    c1 = field_.curves(1.0)
    fam = model.family
    if dense:
        u = np.minimum(np.arange(1, T + h + 1) / T, 1.0)
        mean, var = _conditional(dense_cov_at(model, u), T, x)
    elif fam is Family.WHITE_NOISE:
        mean = np.zeros(h)
        var = np.full(h, c1["sigma"][0] ** 2)
    elif fam is Family.AR:
        a = c1["ar"][0]
        p = a.size
        if T < p:
            raise ValueError("need at least p observations")
        hist = list(x[T - p:])
        mean = np.empty(h)
        for k in range(h):
            mean[k] = a @ np.asarray(hist[::-1][:p])
            hist.append(mean[k])
        psi = _psi_weights(a[None, :], h)[0]
        var = c1["sigma"][0] ** 2 * np.cumsum(psi**2)
    else:
        s = lookback or min(T, max(model.p, default_truncation(T)))
        s = min(s, T)
        g = field_.acvf(1.0, s + h)[0]
        idx = np.arange(s + h)
        S = g[np.abs(idx[:, None] - idx[None, :])]
        mean, var = _conditional(S, s, x[T - s:])
    sd = np.sqrt(var)
    z = float(ndtri(0.5 + 0.5 * level))
    return Forecast(h, mean, sd, mean - z * sd, mean + z * sd, level)
