"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np
from scipy.special import gammaln


class CovarianceNotPD(ArithmeticError):
    """A prediction variance came out non-positive."""


def _step_up(pacf):
    a = np.zeros_like(pacf)
    for m in range(pacf.shape[1]):
        k = pacf[:, m]
        if m:
            a[:, :m] = a[:, :m] - k[:, None] * a[:, m - 1::-1]
        a[:, m] = k
    return a


def _ar_rows(pacf):
    """Per-target coefficients (T, p) zero-padded past order m, and variance factors."""
    T, p = pacf.shape
    a = _step_up(pacf)
    # startup rows use only the first t partial autocorrelations of their own row
    for t in range(min(p, T)):
        a[t] = 0.0
        a[t, :t] = _step_up(pacf[t:t + 1, :t])[0]
    one_minus = 1.0 - pacf**2
    vfac = np.ones(T)
    for t in range(min(p, T)):
        vfac[t] = np.prod(one_minus[t, t:])
    return a, vfac


def _lagged(x, p):
    T = x.size
    L = np.zeros((T, p))
    for j in range(p):
        L[j + 1:, j] = x[: T - j - 1]
    return L


def ar_innovations(x, pacf, sigma):
    x = np.asarray(x, dtype=float)
    a, vfac = _ar_rows(np.asarray(pacf, dtype=float))
    e = x - np.einsum("tj,tj->t", a, _lagged(x, a.shape[1]))
    return e, np.asarray(sigma) ** 2 / vfac


def ar_nll_sum(x, pacf, log_sigma):
    e, v = ar_innovations(x, pacf, np.exp(np.asarray(log_sigma)))
    return nll_sum(e, v)


def ar_simulate(z, pacf, sigma):
    z = np.asarray(z, dtype=float)
    a, vfac = _ar_rows(np.asarray(pacf, dtype=float))
    T, p = a.shape
    scale = np.asarray(sigma) * np.sqrt(1.0 / vfac)
    x = np.empty(T)
    for t in range(T):
        m = min(t, p)
        x[t] = a[t, :m] @ x[t - 1::-1][:m] + scale[t] * z[t] if m else scale[t] * z[t]
    return x


def _fd_coef(m, d):
    j = np.arange(2, m + 1)
    ratios = (m - j + 1) * (j - 1 - d) / (j * (m - d - j + 1))
    return m * d / (m - d) * np.concatenate(([1.0], np.cumprod(ratios)))


def fd_innovations(x, delta, sigma, d):
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    T = x.size
    c0 = np.asarray(sigma) ** 2 * np.exp(gammaln(1.0 - 2.0 * delta) - 2.0 * gammaln(1.0 - delta))
    e = x.copy()
    v = c0.copy()
    for t in range(1, T):
        m = min(t, d)
        dt = delta[t]
        e[t] -= _fd_coef(m, dt) @ x[t - 1::-1][:m]
        k = np.arange(1, m + 1)
        v[t] *= np.prod(1.0 - (dt / (k - dt)) ** 2)
    return e, v


def fd_nll_sum(x, delta, log_sigma, d):
    e, v = fd_innovations(x, delta, np.exp(np.asarray(log_sigma)), d)
    return nll_sum(e, v)


def ld_innovations(x, acvf, d):
    x = np.asarray(x, dtype=float)
    acvf = np.asarray(acvf, dtype=float)
    T = x.size
    e = np.empty(T)
    v = np.empty(T)
    for t in range(T):
        m = min(t, d)
        g = acvf[t]
        a = np.zeros(0)
        vt = g[0]
        if not vt > 0:
            raise CovarianceNotPD(f"local covariance not positive definite at t={t + 1}")
        for k in range(m):
            kap = (g[k + 1] - a @ g[k:0:-1]) / vt
            a = np.append(a - kap * a[::-1], kap)
            vt *= 1.0 - kap * kap
            if not vt > 0:
                raise CovarianceNotPD(f"local covariance not positive definite at t={t + 1}")
        e[t] = x[t] - (a @ x[t - 1::-1][:m] if m else 0.0)
        v[t] = vt
    return e, v


def nll_sum(e, v):
    e = np.asarray(e, dtype=float)
    v = np.asarray(v, dtype=float)
    bad = ~(v > 0) | ~np.isfinite(v)
    if np.any(bad):
        t = int(np.argmax(bad))
        raise CovarianceNotPD(f"prediction variance {v[t]} at t={t + 1}")
    return math.fsum(np.log(v) + e * e / v)
