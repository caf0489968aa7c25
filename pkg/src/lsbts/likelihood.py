"""Exact (prediction-error) and block Whittle negative log-likelihoods.

Both objectives are normalized by the sample size ``T``. The objective
classes precompute everything that does not depend on ``beta`` so that an
evaluation costs one pass of the prediction kernel (exact) or one spectral
grid (Whittle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .basis import grid_matrix
from .levinson import build_dense_cov, innovations_exact
from .models import Family, LsbModelSpec, SpectralField

LOG_2PI = math.log(2.0 * math.pi)


def default_truncation(T: int) -> int:
    """Predictor order cap for non-Markov families: ``min(T, ceil(10 T^0.4))``."""
    return int(min(T, math.ceil(10.0 * T**0.4)))


@dataclass(frozen=True)
class ExactLikConfig:
    """``d`` caps the predictor order for FD/Exp models; ``dense_oracle`` forces the O(T^3) path."""

    d: int | None = None
    dense_oracle: bool = False

    def __post_init__(self):
        if self.d is not None and self.d < 1:
            raise ValueError("truncation d must be a positive integer")

    def truncation(self, T: int) -> int:
        if self.d is not None and self.d > T:
            raise ValueError(f"truncation d={self.d} exceeds T={T}")
        return default_truncation(T) if self.d is None else self.d


class Taper(str, Enum):
    COSINE_BELL = "cosine-bell"
    FLAT = "flat"


def taper_weights(N: int, taper="cosine-bell") -> np.ndarray:
    """Discrete taper ``tau(s/N)``, ``s = 0..N-1``, scaled to unit energy."""
    taper = Taper(taper)
    s = np.arange(N)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * s / N)) if taper is Taper.COSINE_BELL else np.ones(N)
    return w / np.sqrt(np.sum(w * w))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class WhittleConfig:
    """Block layout: length ``N`` (even), step ``S`` and taper."""

    N: int
    S: int
    taper: Taper = Taper.COSINE_BELL

    def __post_init__(self):
        object.__setattr__(self, "taper", Taper(self.taper))
        if self.N < 2 or self.N % 2:
            raise ValueError("block length N must be even and >= 2")
        if not 1 <= self.S <= self.N:
            raise ValueError("step S must satisfy 1 <= S <= N")

    def n_blocks(self, T: int) -> int:
        if self.N > T:
            raise ValueError(f"block length N={self.N} exceeds T={T}")
        return 1 + (T - self.N) // self.S

    def midpoints(self, T: int) -> np.ndarray:
        """Block midpoints ``t_j = S (j - 1) + N / 2``."""
        return self.S * np.arange(self.n_blocks(T)) + self.N // 2


def default_blocks(T: int) -> WhittleConfig:
    """``N`` = even integer nearest ``T^0.6``; ``S = round(0.35 N)``."""
    if T < 64:
        raise ValueError("default block rule needs T >= 64")
    N = 2 * _round_half_up(T**0.6 / 2.0)
    return WhittleConfig(N, max(1, _round_half_up(0.35 * N)), Taper.COSINE_BELL)


def local_periodogram(x, T: int, u_j: float, N: int, taper="cosine-bell") -> np.ndarray:
    """Tapered periodogram of the length-``N`` segment centred at ``u_j T``.

    Returned at the Fourier frequencies ``2 pi k / N``, ``k = 0..N-1``.
    """
    x = np.asarray(x, dtype=float)
    start = _round_half_up(u_j * T) - N // 2  # 0-based
    if start < 0 or start + N > min(T, x.size):
        raise ValueError(f"block at u={u_j} with N={N} falls outside the series")
    seg = x[start: start + N] * taper_weights(N, taper)
    return np.abs(np.fft.fft(seg)) ** 2 / (2.0 * np.pi)


def _check_exact(model: LsbModelSpec, T: int):
    if T < max(2 * model.p + 2, 16):
        raise ValueError(f"exact likelihood needs T >= max(2p+2, 16); got T={T}")


class ExactObjective:
    """``beta -> L_T(beta)`` for fixed data; returns ``inf`` off the valid region."""

    def __init__(self, model: LsbModelSpec, x, cfg: ExactLikConfig | None = None):
        self.model = model
        self.x = np.ascontiguousarray(x, dtype=float)
        self.T = T = self.x.size
        _check_exact(model, T)
        self.cfg = cfg or ExactLikConfig()
        self.d = self.cfg.truncation(T) if model.family in (Family.FD, Family.EXP) else None
        self._W = [grid_matrix(c.basis, T) for c in model.curves]
        self._slices = model.slices

    def nll_sum(self, beta) -> float:
        """``sum_t [log v_t + e_t^2 / v_t]``; raises ``CovarianceNotPD``."""
        beta = np.asarray(beta, dtype=float)
        m = self.model
        if self.cfg.dense_oracle:
            e, v = innovations_exact(build_dense_cov(m.with_beta(beta), self.T), self.x)
            return kernels.nll_sum(e, v)
        eta = [W @ beta[s] for W, s in zip(self._W, self._slices)]
        log_sigma = np.ascontiguousarray(eta[-1])
        fam = m.family
        if fam is Family.AR:
            pacf = np.empty((self.T, m.p))
            for k in range(m.p):
                pacf[:, k] = m.curves[k].link.inverse(eta[k])
            return kernels.ar_nll_sum(self.x, pacf, log_sigma)
        if fam is Family.WHITE_NOISE:
            with np.errstate(over="ignore"):
                v = np.exp(2.0 * log_sigma)
            return kernels.nll_sum(self.x, v)
        if fam is Family.FD:
            delta = np.ascontiguousarray(m.curves[0].link.inverse(eta[0]))
            return kernels.fd_nll_sum(self.x, delta, log_sigma, self.d)
        u = np.arange(1, self.T + 1) / self.T
        acvf = SpectralField(m.with_beta(beta)).acvf(u, self.d)
        e, v = kernels.ld_innovations(self.x, np.ascontiguousarray(acvf), self.d)
        return kernels.nll_sum(e, v)

    def __call__(self, beta) -> float:
        try:
            s = self.nll_sum(beta)
        except kernels.NOT_PD_ERRORS:
            return math.inf
        val = 0.5 * LOG_2PI + s / (2.0 * self.T)
        return val if math.isfinite(val) else math.inf


def exact_nll(model: LsbModelSpec, x, cfg: ExactLikConfig | None = None) -> float:
    """Exact normalized negative log-likelihood at ``model.beta``.

    Raises ``CovarianceNotPD`` instead of returning ``inf``.
    """
    obj = ExactObjective(model, x, cfg)
    return 0.5 * LOG_2PI + obj.nll_sum(model.beta) / (2.0 * obj.T)


class WhittleObjective:
    """``beta -> L^W_T(beta)`` with precomputed block periodograms."""

    def __init__(self, model: LsbModelSpec, x, cfg: WhittleConfig | None = None):
        self.model = model
        self.x = np.asarray(x, dtype=float)
        self.T = T = self.x.size
        self.cfg = cfg = cfg or default_blocks(T)
        N = cfg.N
        mids = cfg.midpoints(T)
        self.u = mids / T
        tau = taper_weights(N, cfg.taper)
        segs = np.stack([self.x[t - N // 2: t + N // 2] for t in mids]) * tau
        self.I = np.abs(np.fft.fft(segs, axis=1)) ** 2 / (2.0 * np.pi)
        lam = 2.0 * np.pi * np.arange(N) / N
        if model.family is Family.FD:
            # avoid the pole: the k = 0 cell is evaluated at half the first Fourier frequency
            lam[0] = np.pi / N
        self.lam = lam

    @property
    def M(self) -> int:
        return self.u.size

    def __call__(self, beta) -> float:
        m = self.model.with_beta(beta)
        logf = SpectralField(m).log_sdf(self.u, self.lam)
        with np.errstate(over="ignore", invalid="ignore"):
            terms = 2.0 * LOG_2PI + logf + self.I * np.exp(-logf)
        val = float(np.sum(terms)) / (2.0 * self.cfg.N * self.M)
        return val if math.isfinite(val) else math.inf


def whittle_nll(model: LsbModelSpec, x, cfg: WhittleConfig | None = None) -> float:
    """Block Whittle objective at ``model.beta``."""
    return WhittleObjective(model, x, cfg)(model.beta)


def make_objective(model: LsbModelSpec, x, likelihood: str = "exact", cfg=None):
    if likelihood == "exact":
        return ExactObjective(model, x, cfg)
    if likelihood == "whittle":
        return WhittleObjective(model, x, cfg)
    raise ValueError(f"unknown likelihood {likelihood!r}")
