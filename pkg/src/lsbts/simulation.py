"""Simulate LSB processes.

Two paths: ``recursive-ar`` runs the local AR recursion forward (white
noise is its order-0 case) and ``dense-gaussian`` multiplies the Cholesky
factor of the model covariance into i.i.d. normals. Normals come from a
counter-based Philox stream through the inverse normal CDF, so a seed
reproduces the same draws on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri

from . import kernels
from .levinson import DENSE_LIMIT, build_dense_cov
from .models import Family, LsbModelSpec, SpectralField

_MASK = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, replication: int) -> int:
    """Per-replication 64-bit seed; injective in ``replication`` for a fixed master."""
    return _splitmix64((_splitmix64(int(master) & _MASK) + int(replication)) & _MASK)


def standard_normals(seed: int, n: int) -> np.ndarray:
    """``n`` standard normals by inverse CDF of Philox uniforms on (0, 1)."""
    gen = np.random.Generator(np.random.Philox(key=int(seed) & _MASK))
    k = gen.integers(0, 1 << 53, size=n, dtype=np.int64)
    return ndtri((k + 0.5) / float(1 << 53))


class SimPath(str, Enum):
    RECURSIVE_AR = "recursive-ar"
    DENSE_GAUSSIAN = "dense-gaussian"


@dataclass(frozen=True)
class SimConfig:
    T: int
    seed: int = 0
    path: SimPath | None = None
    replication: int | None = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be positive")
        if self.path is not None:
            object.__setattr__(self, "path", SimPath(self.path))

    @property
    def stream_seed(self) -> int:
        if self.replication is None:
            return int(self.seed) & _MASK
        return derive_seed(self.seed, self.replication)


def simulate(model: LsbModelSpec, cfg: SimConfig) -> np.ndarray:
    """One realization ``X_1..X_T``.

    The default path is ``recursive-ar`` for white-noise and AR models and
    ``dense-gaussian`` for the rest.
    """
    T = cfg.T
    path = cfg.path
    if path is None:
        path = SimPath.RECURSIVE_AR if model.family in (Family.AR, Family.WHITE_NOISE) \
            else SimPath.DENSE_GAUSSIAN
    z = standard_normals(cfg.stream_seed, T)
    if path is SimPath.RECURSIVE_AR:
        if model.family not in (Family.AR, Family.WHITE_NOISE):
            raise ValueError("the recursive path needs an AR or white-noise model")
        c = SpectralField(model).curves(np.arange(1, T + 1) / T)
        if model.family is Family.WHITE_NOISE:
            return c["sigma"] * z
        return kernels.ar_simulate(z, np.ascontiguousarray(c["pacf"]), c["sigma"])
    if T > DENSE_LIMIT:
        raise ValueError(f"dense path limited to T <= {DENSE_LIMIT}")
    L = build_dense_cov(model, T).cholesky()
    return L @ z
