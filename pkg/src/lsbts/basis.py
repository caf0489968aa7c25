"""Basis systems and link functions for parameter curves.

A parameter curve is ``theta(u) = h(w(u)' beta)`` on rescaled time
``u in [0, 1]``, where ``w`` is a basis vector whose first entry is the
constant function and ``h`` is the inverse of a link function ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import null_space
from scipy.special import expit

# largest double strictly below 1
_ONE_MINUS = float(np.nextafter(1.0, 0.0))


class DomainError(ValueError):
    """Raised when a rescaled-time argument falls outside [0, 1]."""


class BasisKind(str, Enum):
    CONSTANT = "constant"
    RAW_POLYNOMIAL = "raw-polynomial"
    ORTHOGONAL_POLYNOMIAL = "orthogonal-polynomial"
    FOURIER = "fourier"
    NATURAL_CUBIC_SPLINE = "natural-cubic-spline"
    SHIFTED_QUADRATIC = "shifted-quadratic"


class LinkKind(str, Enum):
    LOG = "log"
    SHIFTED_LOGIT_PACF = "shifted-logit-pacf"
    SHIFTED_LOGIT_FD = "shifted-logit-fd"


@dataclass(frozen=True)
class BasisSet:
    """A finite set of continuous functions on [0, 1].

    Parameters
    ----------
    kind : BasisKind
        ``constant`` (1), ``raw-polynomial`` (1, u, u^2, ...),
        ``orthogonal-polynomial`` (shifted Legendre, unit L2 norm),
        ``fourier`` (1, sqrt2 cos 2 pi u, sqrt2 sin 2 pi u, ...),
        ``natural-cubic-spline`` (1 plus centered natural spline columns) or
        ``shifted-quadratic`` (1, u, u^2 - 1/3).
    size : int
        Number of basis functions ``b_j``.
    knots : tuple of float
        Interior knots of the spline kind. Defaults to ``size - 2`` equally
        spaced knots.
    """

    kind: BasisKind
    size: int = 1
    knots: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        size = int(self.size)
        object.__setattr__(self, "size", size)
        if size < 1:
            raise ValueError("basis size must be positive")
        if self.kind is BasisKind.CONSTANT and size != 1:
            raise ValueError("constant basis has size 1")
        if self.kind is BasisKind.SHIFTED_QUADRATIC and size > 3:
            raise ValueError("shifted-quadratic basis has at most 3 functions")
        if self.kind is BasisKind.NATURAL_CUBIC_SPLINE:
            if size < 2:
                raise ValueError("natural cubic spline basis needs size >= 2")
            knots = tuple(float(k) for k in self.knots)
            if not knots:
                knots = tuple(np.linspace(0.0, 1.0, size)[1:-1].tolist())
            if len(knots) != size - 2:
                raise ValueError(f"spline of size {size} needs {size - 2} interior knots")
            k = np.asarray(knots)
            if np.any(np.diff(k) <= 0) or (k.size and (k[0] <= 0.0 or k[-1] >= 1.0)):
                raise ValueError("spline knots must be strictly increasing inside (0, 1)")
            object.__setattr__(self, "knots", knots)
        elif self.knots:
            raise ValueError(f"knots are only meaningful for splines, not {self.kind.value}")

    @cached_property
    def _spline(self) -> tuple[BSpline, np.ndarray]:
        interior = list(self.knots)
        t = np.r_[[0.0] * 4, interior, [1.0] * 4]
        n = len(t) - 4
        full = BSpline(t, np.eye(n), 3)
        second = full.derivative(2)(np.array([0.0, 1.0]))
        # natural constraints, minus the constant direction (partition of unity)
        coef = null_space(np.vstack([second, np.ones(n)]))
        for j in range(coef.shape[1]):
            if coef[np.argmax(np.abs(coef[:, j])), j] < 0:
                coef[:, j] = -coef[:, j]
        means = (t[4:] - t[:-4]) / 4.0 @ coef
        return BSpline(t, coef, 3), means

    def matrix(self, u) -> np.ndarray:
        """Evaluate all basis functions at each point of ``u``; shape (len(u), size)."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u < 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise DomainError("rescaled time must lie in [0, 1]")
        b = self.size
        out = np.empty((u.size, b))
        out[:, 0] = 1.0
        kind = self.kind
        if kind is BasisKind.RAW_POLYNOMIAL or kind is BasisKind.SHIFTED_QUADRATIC:
            for k in range(1, b):
                out[:, k] = u**k
            if kind is BasisKind.SHIFTED_QUADRATIC and b == 3:
                out[:, 2] -= 1.0 / 3.0
        elif kind is BasisKind.ORTHOGONAL_POLYNOMIAL:
            x = 2.0 * u - 1.0
            p_prev, p_cur = np.ones_like(x), x
            for n in range(1, b):
                out[:, n] = np.sqrt(2 * n + 1) * p_cur
                p_prev, p_cur = p_cur, ((2 * n + 1) * x * p_cur - n * p_prev) / (n + 1)
        elif kind is BasisKind.FOURIER:
            for k in range(1, b):
                freq = 2.0 * np.pi * ((k + 1) // 2)
                out[:, k] = np.sqrt(2.0) * (np.cos(freq * u) if k % 2 else np.sin(freq * u))
        elif kind is BasisKind.NATURAL_CUBIC_SPLINE:
            spline, means = self._spline
            out[:, 1:] = spline(u) - means
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "size": self.size}
        if self.kind is BasisKind.NATURAL_CUBIC_SPLINE:
            d["knots"] = list(self.knots)
        return d


@lru_cache(maxsize=256)
def grid_matrix(basis: BasisSet, T: int) -> np.ndarray:
    """Basis matrix at the sampling grid ``u_t = t / T``, ``t = 1..T`` (read-only)."""
    W = basis.matrix(np.arange(1, T + 1) / T)
    W.flags.writeable = False
    return W


def eval_basis(basis: BasisSet, u: float) -> np.ndarray:
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u={u} outside [0, 1]")
    return basis.matrix(u)[0]


@dataclass(frozen=True)
class LinkFunction:
    """Link ``g`` with analytic inverse ``h`` and inverse derivative ``h'``.

    ``log`` maps (0, inf) to R; ``shifted-logit-pacf`` is
    ``logit((x + 1) / 2)`` on (-1, 1); ``shifted-logit-fd`` is
    ``logit(x + 1/2)`` on (-1/2, 1/2).
    """

    kind: LinkKind

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))

    @property
    def range(self) -> tuple[float, float]:
        if self.kind is LinkKind.LOG:
            return (0.0, np.inf)
        if self.kind is LinkKind.SHIFTED_LOGIT_PACF:
            return (-1.0, 1.0)
        return (-0.5, 0.5)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.range
        if not np.all((x > lo) & (x < hi)):
            raise DomainError(f"{self.kind.value} link is defined on ({lo}, {hi})")
        if self.kind is LinkKind.LOG:
            return np.log(x)
        if self.kind is LinkKind.SHIFTED_LOGIT_PACF:
            return 2.0 * np.arctanh(x)
        return 2.0 * np.arctanh(2.0 * x)

    def inverse(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.kind is LinkKind.LOG:
            return np.exp(eta)
        if self.kind is LinkKind.SHIFTED_LOGIT_PACF:
            return np.clip(np.tanh(0.5 * eta), -_ONE_MINUS, _ONE_MINUS)
        return 0.5 * np.clip(np.tanh(0.5 * eta), -_ONE_MINUS, _ONE_MINUS)

    def inverse_derivative(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.kind is LinkKind.LOG:
            return np.exp(eta)
        s = expit(eta)
        d = s * (1.0 - s)
        return 2.0 * d if self.kind is LinkKind.SHIFTED_LOGIT_PACF else d


LOG = LinkFunction(LinkKind.LOG)
PACF_LINK = LinkFunction(LinkKind.SHIFTED_LOGIT_PACF)
FD_LINK = LinkFunction(LinkKind.SHIFTED_LOGIT_FD)


@dataclass(frozen=True)
class ParameterCurveSpec:
    """One parameter curve: basis, link and coefficient vector."""

    basis: BasisSet
    link: LinkFunction
    coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coefficients) or (0.0,) * self.basis.size
        if len(coef) != self.basis.size:
            raise ValueError(
                f"{len(coef)} coefficients for a basis of size {self.basis.size}"
            )
        object.__setattr__(self, "coefficients", coef)

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.coefficients)

    def with_coefficients(self, beta) -> "ParameterCurveSpec":
        return ParameterCurveSpec(self.basis, self.link, tuple(np.asarray(beta, dtype=float)))

    def eta(self, u) -> np.ndarray:
        return self.basis.matrix(u) @ self.beta

    def values(self, u) -> np.ndarray:
        return self.link.inverse(self.eta(u))


def eval_curve(spec: ParameterCurveSpec, u: float) -> float:
    """``theta(u) = h(w(u)' beta)``."""
    return float(spec.link.inverse(eval_basis(spec.basis, u) @ spec.beta))


def curve_gradient(spec: ParameterCurveSpec, u: float) -> np.ndarray:
    """Derivative of ``theta(u)`` with respect to the curve's coefficients."""
    w = eval_basis(spec.basis, u)
    return spec.link.inverse_derivative(w @ spec.beta) * w
