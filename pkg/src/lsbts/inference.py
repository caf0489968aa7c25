"""Fisher information, standard errors and pointwise bands for curves.

``Gamma = (1/4pi) int_0^1 int_{-pi}^{pi} grad log f grad log f' dlam du``
with ``d log f / d beta_{j,l} = S_j(u, lam) w_{j,l}(u)``, where ``S_j`` is
the score of curve ``j`` with respect to its linear predictor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .models import Family, LsbModelSpec, SpectralField

# FD frequency quadrature: geometric panels down to pi * 2^-FD_LEVELS
FD_LEVELS = 20


class RankError(np.linalg.LinAlgError):
    """The information matrix is singular; ``null`` holds the offending direction."""

    def __init__(self, msg, null=None):
        super().__init__(msg)
        self.null = null


def _gauss_legendre(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _lambda_rule(family: Family, n_lam: int):
    """Nodes and weights on (0, pi]; the integrand is even in lambda."""
    if family is not Family.FD:
        m = n_lam // 2
        lam = (np.arange(m) + 0.5) * np.pi / m
        return lam, np.full(m, np.pi / m), 0.0
    nodes, weights = [], []
    per_panel = max(8, n_lam // (2 * FD_LEVELS))
    for k in range(FD_LEVELS):
        x, w = _gauss_legendre(np.pi * 2.0 ** -(k + 1), np.pi * 2.0**-k, per_panel)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights), np.pi * 2.0**-FD_LEVELS


def _tail_moments(eps):
    """``int_0^eps`` of 1, log lam and log^2 lam."""
    le = np.log(eps)
    return eps, eps * (le - 1.0), eps * (le * le - 2.0 * le + 2.0)


@dataclass
class FisherInfo:
    matrix: np.ndarray
    slices: tuple
    off_block_norm: float
    n_u: int
    n_lam: int
    _inv: np.ndarray | None = field(default=None, repr=False)

    def inverse(self) -> np.ndarray:
        if self._inv is None:
            w, V = np.linalg.eigh(self.matrix)
            if w[0] <= 1e-12 * max(w[-1], 1e-300):
                raise RankError(f"singular information matrix (min eigenvalue {w[0]:.3g})",
                                V[:, 0])
            self._inv = (V / w) @ V.T
        return self._inv

    def block(self, j: int) -> np.ndarray:
        s = self.slices[j]
        return self.matrix[s, s]


def fisher_info(model: LsbModelSpec, n_u: int = 200, n_lam: int = 1024) -> FisherInfo:
    """Information matrix at ``model.beta`` by tensor-product quadrature.

    ``u`` uses Gauss-Legendre nodes. In ``lambda`` short-memory families use
    the midpoint rule; FD uses graded Gauss-Legendre panels toward the pole
    plus the closed-form integral of the log-singular tail.
    """
    u, wu = _gauss_legendre(0.0, 1.0, n_u)
    lam, wl, eps = _lambda_rule(model.family, n_lam)
    field_ = SpectralField(model)
    S = field_.score_eta(u, lam)  # (J, n_u, n_lam)
    # (1/4pi) * 2 * int_0^pi  (even integrand)
    K = np.einsum("jul,kul,l->ujk", S, S, wl) / (2.0 * np.pi)
    if eps > 0.0:
        # near zero: S_j ~ a_j + b_j log lam
        m0, m1, m2 = _tail_moments(eps)
        eta = model.eta(u)
        hp = [c.link.inverse_derivative(e) for c, e in zip(model.curves, eta)]
        a = np.zeros((model.J, n_u))
        b = np.zeros((model.J, n_u))
        a[-1] = 2.0
        b[0] = -2.0 * hp[0]
        tail = (np.einsum("ju,ku->ujk", a, a) * m0
                + (np.einsum("ju,ku->ujk", a, b) + np.einsum("ju,ku->ujk", b, a)) * m1
                + np.einsum("ju,ku->ujk", b, b) * m2)
        K += tail / (2.0 * np.pi)
    W = [c.basis.matrix(u) for c in model.curves]
    n = model.n_coef
    G = np.zeros((n, n))
    for j, sj in enumerate(model.slices):
        for k, sk in enumerate(model.slices):
            if k < j:
                continue
            blk = np.einsum("u,ua,ub->ab", wu * K[:, j, k], W[j], W[k])
            G[sj, sk] = blk
            G[sk, sj] = blk.T
    G = 0.5 * (G + G.T)
    off = G.copy()
    for s in model.slices:
        off[s, s] = 0.0
    return FisherInfo(G, model.slices, float(np.max(np.abs(off))) if n else 0.0, n_u,
                      lam.size)


def coefficient_ses(fi: FisherInfo, T: int) -> np.ndarray:
    """``SE_i = sqrt((Gamma^-1)_ii / T)``."""
    return np.sqrt(np.diag(fi.inverse()) / T)


@dataclass
class CurveBand:
    u: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float


def curve_band(model: LsbModelSpec, fi: FisherInfo, T: int, j: int, u_grid,
               level: float = 0.95) -> CurveBand:
    """Pointwise delta-method band for curve ``j`` of a fitted model.

    ``SE(u) = |h'(eta(u))| sqrt(w(u)' C_j w(u) / T)`` where ``C_j`` is the
    ``j``-th diagonal block of ``Gamma^-1``.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    curve = model.curves[j]
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    s = model.slices[j]
    C = fi.inverse()[s, s]
    w = curve.basis.matrix(u)
    eta = w @ curve.beta
    est = curve.link.inverse(eta)
    se = np.abs(curve.link.inverse_derivative(eta)) * np.sqrt(
        np.einsum("ua,ab,ub->u", w, C, w) / T)
    z = float(ndtri(0.5 + 0.5 * level))
    lo_lim, hi_lim = curve.link.range
    lower = np.clip(est - z * se, lo_lim, hi_lim)
    upper = np.clip(est + z * se, lo_lim, hi_lim)
    return CurveBand(u, est, se, lower, upper, level)
