"""LSB model families: transfer functions, spectra and local autocovariances.

Four families are supported. Each owns an ordered list of parameter curves
and a flat coefficient vector ``beta`` obtained by concatenating the
per-curve coefficients.

* ``white-noise``: one log-scale curve ``sigma(u)``.
* ``ar``: ``p`` partial autocorrelation curves then ``sigma(u)``.
* ``exp``: ``p`` cepstral curves then ``sigma(u)``.
* ``fd``: the fractional-differencing curve ``delta(u)`` then ``sigma(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .basis import (
    FD_LINK,
    LOG,
    PACF_LINK,
    BasisKind,
    BasisSet,
    DomainError,
    LinkKind,
    ParameterCurveSpec,
    grid_matrix,
)

TWO_PI = 2.0 * np.pi


class Family(str, Enum):
    WHITE_NOISE = "white-noise"
    AR = "ar"
    EXP = "exp"
    FD = "fd"


class PoleError(ValueError):
    """The FD spectrum was requested at frequency zero where it is infinite."""


_ROLE_LINK = {"pacf": LinkKind.SHIFTED_LOGIT_PACF, "cepstral": LinkKind.LOG,
              "delta": LinkKind.SHIFTED_LOGIT_FD, "scale": LinkKind.LOG}


@dataclass(frozen=True)
class LsbModelSpec:
    """A model family with its parameter curves.

    The last curve is always the log-scale curve ``sigma(u)``.
    """

    family: Family
    curves: tuple[ParameterCurveSpec, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "curves", tuple(self.curves))
        roles = self.roles
        if self.family is Family.WHITE_NOISE and len(self.curves) != 1:
            raise ValueError("white-noise model has exactly one (scale) curve")
        if self.family is Family.FD and len(self.curves) != 2:
            raise ValueError("fd model has a delta curve and a scale curve")
        if self.family in (Family.AR, Family.EXP) and len(self.curves) < 2:
            raise ValueError(f"{self.family.value} model needs p >= 1 curves plus a scale curve")
        for role, curve in zip(roles, self.curves):
            if curve.link.kind is not _ROLE_LINK[role]:
                raise ValueError(f"{role} curve must use the {_ROLE_LINK[role].value} link")

    # -- layout ---------------------------------------------------------

    @property
    def p(self) -> int:
        if self.family in (Family.AR, Family.EXP):
            return len(self.curves) - 1
        return 0

    @property
    def roles(self) -> tuple[str, ...]:
        n = len(self.curves)
        first = {Family.WHITE_NOISE: None, Family.AR: "pacf",
                 Family.EXP: "cepstral", Family.FD: "delta"}[self.family]
        return tuple([first] * (n - 1) + ["scale"])

    @property
    def J(self) -> int:
        return len(self.curves)

    @cached_property
    def slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for c in self.curves:
            out.append(slice(start, start + c.basis.size))
            start += c.basis.size
        return tuple(out)

    @property
    def n_coef(self) -> int:
        return sum(c.basis.size for c in self.curves)

    @property
    def intercept_index(self) -> np.ndarray:
        """Positions of the constant-basis coefficient of every curve."""
        return np.array([s.start for s in self.slices])

    @property
    def beta(self) -> np.ndarray:
        return np.concatenate([c.beta for c in self.curves])

    def with_beta(self, beta) -> "LsbModelSpec":
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.n_coef,):
            raise ValueError(f"expected {self.n_coef} coefficients, got {beta.shape}")
        curves = tuple(c.with_coefficients(beta[s]) for c, s in zip(self.curves, self.slices))
        return LsbModelSpec(self.family, curves, self.name)

    def split(self, beta) -> list[np.ndarray]:
        return [np.asarray(beta)[s] for s in self.slices]

    def is_constant_basis(self) -> bool:
        return all(c.basis.size == 1 for c in self.curves)

    # -- curve evaluation -------------------------------------------------

    def eta(self, u, beta=None) -> list[np.ndarray]:
        beta = self.beta if beta is None else np.asarray(beta, dtype=float)
        return [c.basis.matrix(u) @ beta[s] for c, s in zip(self.curves, self.slices)]

    def grid_eta(self, T: int, beta=None) -> list[np.ndarray]:
        """Linear predictors of every curve at ``u_t = t/T``, ``t = 1..T``."""
        beta = self.beta if beta is None else np.asarray(beta, dtype=float)
        return [grid_matrix(c.basis, T) @ beta[s] for c, s in zip(self.curves, self.slices)]

    def thetas(self, u, beta=None) -> list[np.ndarray]:
        return [c.link.inverse(e) for c, e in zip(self.curves, self.eta(u, beta))]

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "p": self.p, "curves": []}
        for role, c in zip(self.roles, self.curves):
            d["curves"].append({"role": role, "basis": c.basis.to_dict(),
                                "link": c.link.kind.value,
                                "coefficients": list(c.coefficients)})
        return d


# -- constructors -----------------------------------------------------------

def _as_basis(b) -> BasisSet:
    if b is None:
        return BasisSet(BasisKind.CONSTANT, 1)
    return b if isinstance(b, BasisSet) else BasisSet(*b)


def _assemble(family, roles_bases, beta, name=""):
    curves = [ParameterCurveSpec(basis, {"pacf": PACF_LINK, "cepstral": LOG,
                                         "delta": FD_LINK, "scale": LOG}[role])
              for role, basis in roles_bases]
    model = LsbModelSpec(family, tuple(curves), name)
    return model if beta is None else model.with_beta(beta)


def white_noise(scale_basis=None, beta=None, name="") -> LsbModelSpec:
    return _assemble(Family.WHITE_NOISE, [("scale", _as_basis(scale_basis))], beta, name)


def ar_model(p: int, pacf_basis=None, scale_basis=None, beta=None, name="") -> LsbModelSpec:
    """LSB-AR(p). ``pacf_basis`` is one basis shared by all lags or a list of ``p``."""
    if p < 1:
        raise ValueError("AR order must be >= 1")
    bases = pacf_basis if isinstance(pacf_basis, (list, tuple)) and pacf_basis and \
        not isinstance(pacf_basis[0], (str, BasisKind)) else [pacf_basis] * p
    if len(bases) != p:
        raise ValueError("need one PACF basis per lag")
    rb = [("pacf", _as_basis(b)) for b in bases] + [("scale", _as_basis(scale_basis))]
    return _assemble(Family.AR, rb, beta, name)


def exp_model(p: int, cepstral_basis=None, scale_basis=None, beta=None, name="") -> LsbModelSpec:
    if p < 1:
        raise ValueError("Exp order must be >= 1")
    rb = [("cepstral", _as_basis(cepstral_basis))] * p + [("scale", _as_basis(scale_basis))]
    return _assemble(Family.EXP, rb, beta, name)


def fd_model(delta_basis=None, scale_basis=None, beta=None, name="") -> LsbModelSpec:
    rb = [("delta", _as_basis(delta_basis)), ("scale", _as_basis(scale_basis))]
    return _assemble(Family.FD, rb, beta, name)


def lsbar1_design(beta10: float, beta11: float, beta20: float = 0.0) -> LsbModelSpec:
    """LSB-AR(1) with a linear PACF curve and constant scale.

    ``beta20`` is the log innovation *variance*; the scale curve stores
    ``log sigma = beta20 / 2``.
    """
    return ar_model(1, BasisSet(BasisKind.RAW_POLYNOMIAL, 2), None,
                    beta=[beta10, beta11, 0.5 * beta20], name="ar1-linear")


def _ar2_to_ar1() -> LsbModelSpec:
    quad = BasisSet(BasisKind.SHIFTED_QUADRATIC, 3)
    return ar_model(2, quad, None, beta=[0.61, 1.71, -1.27, -3.52, 5.50, -3.00, 0.0],
                    name="ar2-to-ar1")


def _fd_rising() -> LsbModelSpec:
    return fd_model(BasisSet(BasisKind.RAW_POLYNOMIAL, 2), None, beta=[0.1, 2.5, 0.0],
                    name="fd-rising")


PRESETS = {
    "ar2-to-ar1": _ar2_to_ar1,
    "paper-ar2": _ar2_to_ar1,
    "fd-rising": _fd_rising,
    "ar1-linear": lambda: lsbar1_design(1.0, 1.0, 0.0),
}


def preset(name: str) -> LsbModelSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# -- AR helpers ---------------------------------------------------------------

def step_up(pacf: np.ndarray) -> np.ndarray:
    """Levinson-Durbin step-up, vectorized over leading axes.

    ``pacf[..., k-1]`` is the lag-k partial autocorrelation; returns the AR
    coefficients ``phi_{p,1..p}`` with the same shape.
    """
    pacf = np.asarray(pacf, dtype=float)
    p = pacf.shape[-1]
    a = np.zeros_like(pacf)
    for m in range(p):
        k = pacf[..., m]
        if m:
            a[..., :m] = a[..., :m] - k[..., None] * a[..., m - 1::-1]
        a[..., m] = k
    return a


def step_up_jacobian(pacf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """AR coefficients and ``d a_i / d pacf_k`` (shape ``(..., p, p)``)."""
    pacf = np.asarray(pacf, dtype=float)
    p = pacf.shape[-1]
    lead = pacf.shape[:-1]
    a = np.zeros(lead + (p,))
    D = np.zeros(lead + (p, p))
    for m in range(p):
        k = pacf[..., m]
        if m:
            rev_a = a[..., m - 1::-1].copy()
            rev_D = D[..., m - 1::-1, :m].copy()
            a[..., :m] -= k[..., None] * rev_a
            D[..., :m, :m] -= k[..., None, None] * rev_D
            D[..., :m, m] = -rev_a
        a[..., m] = k
        D[..., m, m] = 1.0
    return a, D


def pacf_to_ar(pacf) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to causal AR coefficients."""
    pacf = np.atleast_1d(np.asarray(pacf, dtype=float))
    if np.any(np.abs(pacf) >= 1.0) or np.any(np.isnan(pacf)):
        raise DomainError("partial autocorrelations must lie in (-1, 1)")
    return step_up(pacf)


def ar_acvf_from_pacf(pacf: np.ndarray, sigma2: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocovariances ``gamma(0..max_lag)`` of stationary AR models.

    Uses the inverse Levinson-Durbin recursion, which is exact and stays
    well conditioned near the unit circle. Vectorized over rows of ``pacf``.
    """
    pacf = np.atleast_2d(pacf)
    n, p = pacf.shape
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (n,))
    g = np.zeros((n, max(max_lag, p) + 1))
    g[:, 0] = sigma2 / np.prod(1.0 - pacf**2, axis=1)
    v = g[:, 0].copy()
    a = np.zeros((n, p))
    for m in range(p):
        k = pacf[:, m]
        # gamma(m+1) = sum_j a_{m,j} gamma(m+1-j) + k v_m
        g[:, m + 1] = np.einsum("nj,nj->n", a[:, :m], g[:, m:0:-1]) + k * v
        if m:
            a[:, :m] = a[:, :m] - k[:, None] * a[:, m - 1::-1]
        a[:, m] = k
        v = v * (1.0 - k**2)
    for h in range(p + 1, max_lag + 1):
        g[:, h] = np.einsum("nj,nj->n", a, g[:, h - 1:h - p - 1 if h - p - 1 >= 0 else None:-1])
    return g[:, : max_lag + 1]


def fd_acvf(delta, sigma2, max_lag: int) -> np.ndarray:
    """Fractional-noise autocovariances, vectorized over ``delta``."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), delta.shape)
    g = np.empty((delta.size, max_lag + 1))
    g[:, 0] = sigma2 * np.exp(gammaln(1.0 - 2.0 * delta) - 2.0 * gammaln(1.0 - delta))
    for h in range(1, max_lag + 1):
        g[:, h] = g[:, h - 1] * (h - 1 + delta) / (h - delta)
    return g


def fd_log_filter(lam) -> tuple[np.ndarray, np.ndarray]:
    """``log|1 - e^{-i lam}|`` and ``arg(1 - e^{-i lam})``."""
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        logmod = np.log(np.abs(2.0 * np.sin(0.5 * lam)))
    return logmod, np.angle(1.0 - np.exp(-1j * lam))


# -- spectral field -------------------------------------------------------------

class SpectralField:
    """Time-varying transfer function and spectrum of one model.

    Curve values at a given ``u`` grid are cached, so repeated spectral
    evaluations on the same grid cost one basis evaluation. Instances are
    cheap; build a new one per coefficient vector.
    """

    def __init__(self, model: LsbModelSpec):
        self.model = model
        self._cache: dict = {}

    def curves(self, u) -> dict:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        key = ("curves", u.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        m = self.model
        th = m.thetas(u)
        out = {"sigma": th[-1]}
        if m.family is Family.AR:
            out["pacf"] = np.column_stack(th[:-1])
            out["ar"] = step_up(out["pacf"])
        elif m.family is Family.EXP:
            out["cepstral"] = np.column_stack(th[:-1])
        elif m.family is Family.FD:
            out["delta"] = th[0]
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = out
        return out

    def transfer(self, u, lam) -> np.ndarray:
        """Complex ``A(u, lam)`` on the outer grid, shape ``(len(u), len(lam))``."""
        c = self.curves(u)
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        amp = (c["sigma"] / np.sqrt(TWO_PI))[:, None]
        fam = self.model.family
        if fam is Family.WHITE_NOISE:
            return amp * np.ones((1, lam.size), dtype=complex)
        if fam is Family.AR:
            return amp / self._ar_poly(c["ar"], lam)
        if fam is Family.EXP:
            j = np.arange(1, c["cepstral"].shape[1] + 1)
            s = c["cepstral"] @ np.cos(np.outer(j, lam))
            return amp * np.exp(s).astype(complex)
        delta = c["delta"][:, None]
        self._check_pole(delta, lam)
        logmod, arg = fd_log_filter(lam)
        with np.errstate(divide="ignore", invalid="ignore"):
            return amp * np.exp(-delta * (logmod[None, :] + 1j * arg[None, :]))

    @staticmethod
    def _ar_poly(a, lam):
        j = np.arange(1, a.shape[1] + 1)
        return 1.0 - a @ np.exp(-1j * np.outer(j, lam))

    @staticmethod
    def _check_pole(delta, lam):
        if np.any(lam == 0.0) and np.any(delta > 0):
            raise PoleError("fd spectrum has a pole at frequency 0 when delta(u) > 0")

    def log_sdf(self, u, lam) -> np.ndarray:
        c = self.curves(u)
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        base = (2.0 * np.log(c["sigma"]) - np.log(TWO_PI))[:, None]
        fam = self.model.family
        if fam is Family.WHITE_NOISE:
            return np.broadcast_to(base, (base.shape[0], lam.size)).copy()
        if fam is Family.AR:
            return base - np.log(np.abs(self._ar_poly(c["ar"], lam)) ** 2)
        if fam is Family.EXP:
            j = np.arange(1, c["cepstral"].shape[1] + 1)
            return base + 2.0 * c["cepstral"] @ np.cos(np.outer(j, lam))
        delta = c["delta"][:, None]
        self._check_pole(delta, lam)
        logmod, _ = fd_log_filter(lam)
        with np.errstate(invalid="ignore"):
            out = base - 2.0 * delta * logmod[None, :]
        # delta == 0 at lam == 0 is 0 * inf
        return np.where(np.isnan(out), base, out)

    def sdf(self, u, lam) -> np.ndarray:
        return np.exp(self.log_sdf(u, lam))

    def score_eta(self, u, lam) -> np.ndarray:
        """``d log f / d eta_j`` for every curve, shape ``(J, len(u), len(lam))``.

        ``eta_j = g_j(theta_j)`` is the curve's linear predictor; the chain
        rule through the inverse link is applied analytically.
        """
        m = self.model
        u = np.atleast_1d(np.asarray(u, dtype=float))
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        eta = m.eta(u)
        hprime = [c.link.inverse_derivative(e) for c, e in zip(m.curves, eta)]
        out = np.empty((m.J, u.size, lam.size))
        # log f = 2 log sigma + ..., and sigma * d/dsigma = 1
        out[-1] = 2.0
        c = self.curves(u)
        if m.family is Family.AR:
            a, D = step_up_jacobian(c["pacf"])
            phi = self._ar_poly(a, lam)
            j = np.arange(1, m.p + 1)
            # d log f / d a_i = 2 Re(e^{-i i lam} / Phi)
            Q = 2.0 * np.real(np.exp(-1j * np.outer(j, lam))[None, :, :] / phi[:, None, :])
            S = np.einsum("nil,nik->knl", Q, D)
            for k in range(m.p):
                out[k] = S[k] * hprime[k][:, None]
        elif m.family is Family.EXP:
            for k in range(m.p):
                out[k] = 2.0 * np.cos((k + 1) * lam)[None, :] * hprime[k][:, None]
        elif m.family is Family.FD:
            logmod, _ = fd_log_filter(lam)
            out[0] = -2.0 * logmod[None, :] * hprime[0][:, None]
        return out

    def acvf(self, u, max_lag: int) -> np.ndarray:
        """Local autocovariances ``c(u, 0..max_lag)``, shape ``(len(u), max_lag+1)``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        key = ("acvf", u.tobytes(), max_lag)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        c = self.curves(u)
        s2 = c["sigma"] ** 2
        fam = self.model.family
        if fam is Family.WHITE_NOISE:
            out = np.zeros((u.size, max_lag + 1))
            out[:, 0] = s2
        elif fam is Family.AR:
            out = ar_acvf_from_pacf(c["pacf"], s2, max_lag)
        elif fam is Family.FD:
            out = fd_acvf(c["delta"], s2, max_lag)
        else:
            out = _quadrature_acvf(self, u, max_lag, _exp_grid(max_lag))
        self._cache[key] = out
        return out


def _exp_grid(max_lag: int) -> int:
    g = 4096
    while g < 4 * (max_lag + 1):
        g *= 2
    return g


def _quadrature_acvf(field: SpectralField, u, max_lag: int, grid: int, midpoint=False):
    """Rectangle rule on the periodic integrand via one FFT per ``u``."""
    if max_lag >= grid // 2:
        raise ValueError("quadrature grid too coarse for the requested lags")
    shift = 0.5 if midpoint else 0.0
    lam = TWO_PI * (np.arange(grid) + shift) / grid
    lam = np.where(lam > np.pi, lam - TWO_PI, lam)
    f = field.sdf(u, lam)
    # sum_k f(lam_k) e^{i h lam_k}; lam_k = 2 pi (k + shift)/G
    phase = np.exp(1j * TWO_PI * shift * np.arange(max_lag + 1) / grid)
    spec = np.fft.ifft(f, axis=1)[:, : max_lag + 1] * grid
    return (TWO_PI / grid) * np.real(spec * phase[None, :])


# -- public operations ------------------------------------------------------------

def transfer(model: LsbModelSpec, u, lam):
    """Time-varying transfer function ``A(u, lam)``; scalar in, scalar out."""
    out = SpectralField(model).transfer(u, lam)
    return out[0, 0] if np.ndim(u) == 0 and np.ndim(lam) == 0 else out


def sdf(model: LsbModelSpec, u, lam):
    out = SpectralField(model).sdf(u, lam)
    return float(out[0, 0]) if np.ndim(u) == 0 and np.ndim(lam) == 0 else out


def local_acvf(model: LsbModelSpec, u, h):
    """``c(u, h) = int f(u, lam) e^{i h lam} d lam`` from the family closed form."""
    h_arr = np.atleast_1d(np.asarray(h, dtype=int))
    if np.any(h_arr < 0):
        h_arr = np.abs(h_arr)
    g = SpectralField(model).acvf(u, int(h_arr.max()))
    out = g[:, h_arr]
    if np.ndim(u) == 0 and np.ndim(h) == 0:
        return float(out[0, 0])
    return out[0] if np.ndim(u) == 0 else out


def acvf_quadrature_oracle(model: LsbModelSpec, u: float, h: int, grid_size: int = 4096,
                           richardson: int = 0) -> float:
    """Reference value of ``c(u, h)`` by direct frequency-domain quadrature.

    FD models with a pole (``delta(u) > 0``) or zero use midpoint cells,
    whose error expands in powers ``G^{-(1 - 2 delta + 2k)}``;
    ``richardson`` levels of extrapolation over doubled grids remove the
    leading terms.
    """
    if grid_size < 2**12 or grid_size & (grid_size - 1):
        raise ValueError("grid_size must be a power of two >= 4096")
    field_ = SpectralField(model)
    midpoint = False
    exps = []
    if model.family is Family.FD:
        d = float(field_.curves(u)["delta"][0])
        if d != 0.0:
            midpoint = True
            exps = [1.0 - 2.0 * d + 2.0 * k for k in range(richardson)]
    vals = [float(_quadrature_acvf(field_, u, h, grid_size * 2**i, midpoint)[0, h])
            for i in range(len(exps) + 1)]
    for e in exps:
        r = 2.0**e
        vals = [(r * vals[i + 1] - vals[i]) / (r - 1.0) for i in range(len(vals) - 1)]
    return vals[0]


@dataclass
class ValidityReport:
    passed: bool
    checks: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def validate(model: LsbModelSpec, n_grid: int = 512, root_margin: float = 1e-8) -> ValidityReport:
    """Check local stationarity conditions on a grid of ``u``.

    Every check reports ``(passed, minimum margin)``. A root margin below
    ``root_margin`` is reported as a warning, not a failure: the link
    functions keep every model causal, only numerically close to the
    boundary.
    """
    u = np.linspace(0.0, 1.0, n_grid)
    c = SpectralField(model).curves(u)
    checks, warnings = {}, []
    sig = c["sigma"]
    checks["scale_positive"] = (bool(np.all(sig > 0) and np.all(np.isfinite(sig))),
                                float(np.min(sig)))
    if model.family is Family.AR:
        pacf = c["pacf"]
        margin = float(np.min(1.0 - np.abs(pacf)))
        checks["pacf_in_unit_interval"] = (margin > 0, margin)
        root = np.inf
        for a in c["ar"]:
            comp = np.zeros((a.size, a.size))
            comp[0] = a
            comp[1:, :-1] = np.eye(a.size - 1)
            lam_max = np.max(np.abs(np.linalg.eigvals(comp)))
            root = min(root, (1.0 / lam_max - 1.0) if lam_max > 0 else np.inf)
        checks["roots_outside_unit_circle"] = (root > 0, float(root))
        if root < root_margin:
            warnings.append(f"AR root margin {root:.3g} below {root_margin:g}")
    elif model.family is Family.FD:
        margin = float(np.min(0.5 - np.abs(c["delta"])))
        checks["delta_in_range"] = (margin > 0, margin)
    elif model.family is Family.EXP:
        cep = c["cepstral"]
        ok = bool(np.all(cep > 0) and np.all(np.isfinite(cep)))
        checks["cepstral_positive"] = (ok, float(np.min(cep)))
    passed = all(v[0] for v in checks.values())
    return ValidityReport(passed, checks, warnings)
