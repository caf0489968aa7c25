"""Levinson-Durbin prediction: local recursion and the exact dense path.

The likelihood hot path lives in :mod:`lsbts.kernels`; this module holds
the step-wise recursion, the classical stationary solver used as a
reference, and the dense model covariance with its Cholesky innovations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular
from scipy.special import gammaln, rgamma

from .kernels import CovarianceNotPD
from .models import Family, LsbModelSpec, SpectralField, step_up

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class PredictionState:
    """Order-``t`` linear predictor: ``X_hat = sum_k coeffs[k-1] X_{t+1-k}``."""

    t: int = 0
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pred_var: float = np.nan
    history: tuple = ()


def tv_ld_step(state: PredictionState, cov_fn: Callable[[float, int], float],
               t: int, T: int) -> PredictionState:
    """One local Levinson-Durbin update from order ``t - 1`` to order ``t``.

    The covariance ``cov_fn(u, h)`` is frozen at ``u = t / T`` for the
    whole update. Starting from ``PredictionState()`` the first call also
    sets ``pred_var = cov_fn(1/T, 0)``.
    """
    if t != state.t + 1:
        raise ValueError(f"state has order {state.t}; cannot step to order {t}")
    if state.t == 0:
        v0 = float(cov_fn(1.0 / T, 0))
        if not v0 > 0:
            raise CovarianceNotPD(f"non-positive variance {v0}")
        state = PredictionState(0, np.zeros(0), v0, (v0,))
    u = min(t / T, 1.0)
    phi = state.coeffs
    c = np.array([cov_fn(u, h) for h in range(1, t + 1)])
    # c[h-1] = c(u, h); sum_j phi_{t-1,j} c(u, t-j)
    kappa = (c[t - 1] - phi @ c[t - 2::-1][: t - 1]) / state.pred_var if t > 1 \
        else c[0] / state.pred_var
    new = np.empty(t)
    new[: t - 1] = phi - kappa * phi[::-1]
    new[t - 1] = kappa
    v = state.pred_var * (1.0 - kappa * kappa)
    if not v > 0:
        raise CovarianceNotPD(f"prediction variance {v} at order {t}")
    return PredictionState(t, new, v, state.history + (v,))


def levinson_durbin(acvf, order: int):
    """Classical stationary recursion.

    Returns
    -------
    coeffs : ndarray
        ``phi_{order,1..order}``.
    pred_var : ndarray
        Prediction variances of orders ``0..order``.
    pacf : ndarray
        Partial autocorrelations ``phi_{k,k}``, ``k = 1..order``.
    """
    g = np.asarray(acvf, dtype=float)
    a = np.zeros(0)
    v = [g[0]]
    pacf = []
    for k in range(order):
        kap = (g[k + 1] - a @ g[k:0:-1]) / v[-1]
        a = np.append(a - kap * a[::-1], kap)
        v.append(v[-1] * (1.0 - kap * kap))
        if not v[-1] > 0:
            raise CovarianceNotPD(f"prediction variance {v[-1]} at order {k + 1}")
        pacf.append(kap)
    return a, np.array(v), np.array(pacf)


@dataclass(frozen=True)
class DenseCovariance:
    """Symmetric positive-definite model covariance of ``X_1..X_T``."""

    matrix: np.ndarray

    @property
    def T(self) -> int:
        return self.matrix.shape[0]

    def cholesky(self) -> np.ndarray:
        try:
            return cholesky(self.matrix, lower=True, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise CovarianceNotPD(str(exc)) from None


def innovations_exact(cov: DenseCovariance, x) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-step innovations and their variances from the Cholesky factor."""
    x = np.asarray(x, dtype=float)
    L = cov.cholesky()
    d = np.diag(L)
    z = solve_triangular(L, x, lower=True)
    return d * z, d * d


def _psi_weights(a: np.ndarray, L: int) -> np.ndarray:
    """MA(inf) weights ``psi_0..psi_{L-1}`` for each row of AR coefficients."""
    n, p = a.shape
    psi = np.zeros((n, L))
    psi[:, 0] = 1.0
    for j in range(1, L):
        k = min(j, p)
        psi[:, j] = np.einsum("ni,ni->n", a[:, :k], psi[:, j - 1::-1][:, :k])
    return psi


def ar_truncation(a: np.ndarray, tol: float = 1e-17, cap: int = 200_000) -> int:
    """Number of MA(inf) weights needed so the dropped tail is below ``tol``."""
    rho = 0.0
    p = a.shape[1]
    comp = np.zeros((p, p))
    if p > 1:
        comp[1:, :-1] = np.eye(p - 1)
    for row in a:
        comp[0] = row
        rho = max(rho, float(np.max(np.abs(np.linalg.eigvals(comp)))))
    if rho <= 0.0:
        return p + 1
    # polynomial prefactor for repeated roots: pad generously
    L = int(np.ceil(np.log(tol) / np.log(rho))) + 10 * p + 10
    return min(max(L, p + 1), cap)


def _fd_dense(delta: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    T = delta.size
    k, l = np.tril_indices(T)
    h = (k - l).astype(float)
    dk, dl = delta[k], delta[l]
    base = np.exp(gammaln(1.0 - dk - dl) - gammaln(1.0 - dk))
    lag0 = h == 0
    val = np.empty_like(h)
    val[lag0] = base[lag0] * rgamma(1.0 - dl[lag0])
    hp = ~lag0
    val[hp] = (base[hp] * rgamma(dk[hp])
               * np.exp(gammaln(h[hp] + dk[hp]) - gammaln(h[hp] + 1.0 - dl[hp])))
    S = np.zeros((T, T))
    S[k, l] = val * sigma[k] * sigma[l]
    return S + np.tril(S, -1).T


def _quadrature_dense(model: LsbModelSpec, u: np.ndarray, grid: int, midpoint: bool) -> np.ndarray:
    shift = 0.5 if midpoint else 0.0
    lam = 2.0 * np.pi * (np.arange(grid) + shift) / grid - np.pi
    A = SpectralField(model).transfer(u, lam)
    B = A * np.exp(1j * np.outer(np.arange(1, u.size + 1), lam)) * np.sqrt(2.0 * np.pi / grid)
    return np.real(B @ B.conj().T)


def _ar_dense(a: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """``sum_j psi^k_j psi^l_{j-(k-l)}`` scaled by ``sigma_k sigma_l``.

    Lags beyond the MA(inf) truncation length are below the truncation
    tolerance and left at zero.
    """
    T = a.shape[0]
    L = ar_truncation(a)
    psi = _psi_weights(a, L) * sigma[:, None]
    S = np.zeros((T, T))
    for h in range(min(L, T)):
        band = np.einsum("kj,kj->k", psi[h:, h:], psi[: T - h, : L - h])
        idx = np.arange(h, T)
        S[idx, idx - h] = band
        S[idx - h, idx] = band
    return S


def dense_cov_at(model: LsbModelSpec, u, method: str = "auto", grid: int = 4096) -> np.ndarray:
    """Covariance of ``X_1..X_n`` whose local models sit at rescaled times ``u``.

    ``method='auto'`` uses the exact closed form available for white
    noise, AR (MA(inf) weights) and FD (gamma-function cross covariance);
    Exp models, or ``method='quadrature'``, integrate on a frequency grid
    (midpoint cells for FD).
    """
    if method not in ("auto", "quadrature"):
        raise ValueError("method must be 'auto' or 'quadrature'")
    u = np.asarray(u, dtype=float)
    c = SpectralField(model).curves(u)
    sigma = c["sigma"]
    fam = model.family
    if method == "quadrature" or fam is Family.EXP:
        S = _quadrature_dense(model, u, max(grid, 4 * u.size), midpoint=fam is Family.FD)
    elif fam is Family.WHITE_NOISE:
        S = np.diag(sigma**2)
    elif fam is Family.AR:
        S = _ar_dense(c["ar"], sigma)
    else:
        S = _fd_dense(c["delta"], sigma)
    return 0.5 * (S + S.T)


def build_dense_cov(model: LsbModelSpec, T: int, method: str = "auto",
                    grid: int = 4096, limit: int = DENSE_LIMIT) -> DenseCovariance:
    """Model covariance ``c0(k, l) = int A(k/T, lam) A(l/T, -lam) e^{i lam (k-l)} d lam``."""
    if T > limit:
        raise ValueError(f"T={T} exceeds the dense limit {limit}")
    return DenseCovariance(dense_cov_at(model, np.arange(1, T + 1) / T, method, grid))


def stationary_ar_state(model: LsbModelSpec, u: float) -> np.ndarray:
    """AR coefficients of the local model frozen at ``u``."""
    return step_up(SpectralField(model).curves(u)["pacf"])[0]
