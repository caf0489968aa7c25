# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled prediction kernels.

Every function here has a line-for-line numpy twin in ``_kernels_py``;
``kernels`` picks one at import time.
"""

import numpy as np
from libc.math cimport log, lgamma, sqrt, exp, isfinite


class CovarianceNotPD(ArithmeticError):
    """A prediction variance came out non-positive."""


cdef inline void _nsum(double *s, double *c, double v) nogil:
    # Neumaier compensated summation
    cdef double t = s[0] + v
    if abs(s[0]) >= abs(v):
        c[0] += (s[0] - t) + v
    else:
        c[0] += (v - t) + s[0]
    s[0] = t


cdef int _ar_step(const double[:, ::1] pacf, Py_ssize_t t, Py_ssize_t p,
                  double *a, double *tmp, double *vfac) noexcept nogil:
    """Coefficients of order m = min(t, p) from the PACF row t; returns m.

    ``vfac`` receives prod_{k>m} (1 - pacf_k^2), the ratio of the innovation
    variance to the order-m prediction variance.
    """
    cdef Py_ssize_t m = t if t < p else p
    cdef Py_ssize_t i, k
    cdef double kap, f = 1.0
    for k in range(m):
        kap = pacf[t, k]
        for i in range(k):
            tmp[i] = a[i] - kap * a[k - 1 - i]
        for i in range(k):
            a[i] = tmp[i]
        a[k] = kap
    for k in range(m, p):
        kap = pacf[t, k]
        f *= 1.0 - kap * kap
    vfac[0] = f
    return <int>m


def ar_nll_sum(const double[::1] x, const double[:, ::1] pacf, const double[::1] log_sigma):
    """Sum over t of ``log v_t + e_t^2 / v_t`` for the local AR predictor."""
    cdef Py_ssize_t T = x.shape[0], p = pacf.shape[1]
    cdef Py_ssize_t t, j, m
    cdef double e, v, vfac, s = 0.0, c = 0.0
    a_arr = np.zeros(max(p, 1))
    tmp_arr = np.zeros(max(p, 1))
    cdef double[::1] a = a_arr, tmp = tmp_arr
    with nogil:
        for t in range(T):
            m = _ar_step(pacf, t, p, &a[0], &tmp[0], &vfac)
            e = x[t]
            for j in range(m):
                e -= a[j] * x[t - 1 - j]
            v = exp(2.0 * log_sigma[t]) / vfac
            if not (v > 0.0) or not isfinite(v):
                with gil:
                    raise CovarianceNotPD(f"prediction variance {v} at t={t + 1}")
            _nsum(&s, &c, log(v) + e * e / v)
    return s + c


def ar_innovations(const double[::1] x, const double[:, ::1] pacf, const double[::1] sigma):
    """Innovations ``e_t`` and prediction variances ``v_t`` of the local AR predictor."""
    cdef Py_ssize_t T = x.shape[0], p = pacf.shape[1]
    cdef Py_ssize_t t, j, m
    cdef double vfac
    e_arr = np.empty(T)
    v_arr = np.empty(T)
    a_arr = np.zeros(max(p, 1))
    tmp_arr = np.zeros(max(p, 1))
    cdef double[::1] e = e_arr, v = v_arr, a = a_arr, tmp = tmp_arr
    with nogil:
        for t in range(T):
            m = _ar_step(pacf, t, p, &a[0], &tmp[0], &vfac)
            e[t] = x[t]
            for j in range(m):
                e[t] -= a[j] * x[t - 1 - j]
            v[t] = sigma[t] * sigma[t] / vfac
    return e_arr, v_arr


def ar_simulate(const double[::1] z, const double[:, ::1] pacf, const double[::1] sigma):
    """Run the local AR recursion forward driven by standard normals ``z``."""
    cdef Py_ssize_t T = z.shape[0], p = pacf.shape[1]
    cdef Py_ssize_t t, j, m
    cdef double vfac, acc
    x_arr = np.empty(T)
    a_arr = np.zeros(max(p, 1))
    tmp_arr = np.zeros(max(p, 1))
    cdef double[::1] x = x_arr, a = a_arr, tmp = tmp_arr
    with nogil:
        for t in range(T):
            m = _ar_step(pacf, t, p, &a[0], &tmp[0], &vfac)
            acc = 0.0
            for j in range(m):
                acc += a[j] * x[t - 1 - j]
            x[t] = acc + sigma[t] * sqrt(1.0 / vfac) * z[t]
    return x_arr


cdef double _fd_predict(const double[::1] x, Py_ssize_t t, Py_ssize_t m, double d,
                        double *v) noexcept nogil:
    """Order-m fractional-noise predictor of x[t]; returns the innovation.

    ``v`` enters holding c(0) and leaves holding the order-m prediction variance.
    """
    cdef Py_ssize_t j
    cdef double phi, e = x[t], q, r
    if m == 0:
        return e
    phi = m * d / (m - d)
    e -= phi * x[t - 1]
    for j in range(2, m + 1):
        phi *= (m - j + 1) * (j - 1 - d) / (j * (m - d - j + 1))
        e -= phi * x[t - j]
    r = 1.0
    for j in range(1, m + 1):
        q = d / (j - d)
        r *= 1.0 - q * q
    v[0] *= r
    return e


def fd_nll_sum(const double[::1] x, const double[::1] delta, const double[::1] log_sigma,
               Py_ssize_t d):
    """Sum of ``log v_t + e_t^2/v_t`` for fractional noise truncated at order ``d``."""
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t t, m
    cdef double e, v, dt, s = 0.0, c = 0.0
    with nogil:
        for t in range(T):
            m = t if t < d else d
            dt = delta[t]
            v = exp(2.0 * log_sigma[t] + lgamma(1.0 - 2.0 * dt) - 2.0 * lgamma(1.0 - dt))
            e = _fd_predict(x, t, m, dt, &v)
            if not (v > 0.0) or not isfinite(v):
                with gil:
                    raise CovarianceNotPD(f"prediction variance {v} at t={t + 1}")
            _nsum(&s, &c, log(v) + e * e / v)
    return s + c


def fd_innovations(const double[::1] x, const double[::1] delta, const double[::1] sigma,
                   Py_ssize_t d):
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t t, m
    cdef double vt, dt
    e_arr = np.empty(T)
    v_arr = np.empty(T)
    cdef double[::1] e = e_arr, v = v_arr
    with nogil:
        for t in range(T):
            m = t if t < d else d
            dt = delta[t]
            vt = sigma[t] * sigma[t] * exp(lgamma(1.0 - 2.0 * dt) - 2.0 * lgamma(1.0 - dt))
            e[t] = _fd_predict(x, t, m, dt, &vt)
            v[t] = vt
    return e_arr, v_arr


cdef int _ld_row(const double[:, ::1] acvf, Py_ssize_t t, Py_ssize_t m,
                 double *a, double *tmp, double *v) noexcept nogil:
    """Classical Levinson-Durbin on row t of ``acvf`` up to order m.

    Returns 0 on success, -1 on a non-positive prediction variance.
    """
    cdef Py_ssize_t k, j
    cdef double kap, num
    v[0] = acvf[t, 0]
    if not (v[0] > 0.0):
        return -1
    for k in range(m):
        num = acvf[t, k + 1]
        for j in range(k):
            num -= a[j] * acvf[t, k - j]
        kap = num / v[0]
        for j in range(k):
            tmp[j] = a[j] - kap * a[k - 1 - j]
        for j in range(k):
            a[j] = tmp[j]
        a[k] = kap
        v[0] *= 1.0 - kap * kap
        if not (v[0] > 0.0):
            return -1
    return 0


def ld_innovations(const double[::1] x, const double[:, ::1] acvf, Py_ssize_t d):
    """Innovations from a fresh order-``min(t-1, d)`` LD fit per target time.

    ``acvf[t, h]`` is the local autocovariance at lag ``h`` used to predict
    ``x[t]``.
    """
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t t, j, m
    cdef int bad = 0
    e_arr = np.empty(T)
    v_arr = np.empty(T)
    a_arr = np.zeros(max(d, 1))
    tmp_arr = np.zeros(max(d, 1))
    cdef double[::1] e = e_arr, v = v_arr, a = a_arr, tmp = tmp_arr
    with nogil:
        for t in range(T):
            m = t if t < d else d
            if _ld_row(acvf, t, m, &a[0], &tmp[0], &v[t]) != 0:
                bad = <int>t + 1
                break
            e[t] = x[t]
            for j in range(m):
                e[t] -= a[j] * x[t - 1 - j]
    if bad:
        raise CovarianceNotPD(f"local covariance not positive definite at t={bad}")
    return e_arr, v_arr


def nll_sum(const double[::1] e, const double[::1] v):
    """Compensated sum of ``log v + e^2 / v``."""
    cdef Py_ssize_t t
    cdef double s = 0.0, c = 0.0
    for t in range(e.shape[0]):
        if not (v[t] > 0.0) or not isfinite(v[t]):
            raise CovarianceNotPD(f"prediction variance {v[t]} at t={t + 1}")
        _nsum(&s, &c, log(v[t]) + e[t] * e[t] / v[t])
    return s + c
