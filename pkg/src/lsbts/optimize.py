"""BFGS with a strong-Wolfe line search and finite-difference gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class StartError(ValueError):
    """The objective is not finite at the starting point."""


@dataclass(frozen=True)
class OptimConfig:
    grad_step: float = 1e-6
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    max_iter: int = 500
    c1: float = 1e-4
    c2: float = 0.9
    restarts: int = 3
    jitter: float = 0.01
    max_line_search: int = 40
    seed: int = 0
    keep_trace: bool = False

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if min(self.grad_step, self.grad_tol, self.step_tol) <= 0 or self.max_iter < 1:
            raise ValueError("tolerances and max_iter must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass
class OptimResult:
    beta_hat: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    n_eval: int = 0
    message: str = ""
    restarts_used: int = 0
    trace: list = field(default_factory=list)


def numerical_gradient(fun, x, fx=None, step=1e-6) -> np.ndarray:
    """Central differences with ``h_i = step * max(1, |x_i|)``.

    Falls back to a one-sided difference when one side is not finite.
    """
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = fun(x)
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = fun(xp), fun(xm)
        hp, hm = xp[i] - x[i], x[i] - xm[i]
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (hp + hm)
        elif math.isfinite(fp):
            g[i] = (fp - fx) / hp
        elif math.isfinite(fm):
            g[i] = (fx - fm) / hm
        else:
            g[i] = np.nan
    return g


class _Counted:
    def __init__(self, fun):
        self.fun = fun
        self.n = 0

    def __call__(self, x):
        self.n += 1
        v = float(self.fun(x))
        return v if math.isfinite(v) else math.inf


def _interpolate(lo, hi, f_lo, f_hi, d_lo):
    """Minimizer of the quadratic through (lo, f_lo, d_lo) and (hi, f_hi), safeguarded."""
    width = hi - lo
    denom = 2.0 * (f_hi - f_lo - d_lo * width)
    a = lo - d_lo * width * width / denom if denom > 0 and math.isfinite(f_hi) else math.nan
    left, right = min(lo, hi), max(lo, hi)
    margin = 0.1 * abs(width)
    if not (left + margin <= a <= right - margin):
        a = 0.5 * (lo + hi)
    return a


def _line_search(fun, grad, x, f0, g0, p, alpha, cfg):
    """Strong-Wolfe bracketing and zoom; returns (alpha, f, g) or None."""
    d0 = float(g0 @ p)
    best = None  # best point with sufficient decrease, for the fallback

    def zoom(lo, hi, f_lo, f_hi, d_lo):
        nonlocal best
        for _ in range(cfg.max_line_search):
            a = _interpolate(lo, hi, f_lo, f_hi, d_lo)
            xa = x + a * p
            fa = fun(xa)
            if fa > f0 + cfg.c1 * a * d0 or fa >= f_lo:
                hi, f_hi = a, fa
            else:
                ga = grad(xa, fa)
                da = float(ga @ p)
                if best is None or fa < best[1]:
                    best = (a, fa, ga)
                if abs(da) <= -cfg.c2 * d0:
                    return a, fa, ga
                if da * (hi - lo) >= 0:
                    hi, f_hi = lo, f_lo
                lo, f_lo, d_lo = a, fa, da
            if abs(hi - lo) * np.max(np.abs(p)) < 1e-16 * (1.0 + np.max(np.abs(x))):
                break
        return best

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha
    for i in range(cfg.max_line_search):
        xa = x + a * p
        fa = fun(xa)
        if not math.isfinite(fa):
            # shrink toward the last good point
            a = a_prev + 0.5 * (a - a_prev)
            continue
        if fa > f0 + cfg.c1 * a * d0 or (i > 0 and fa >= f_prev):
            return zoom(a_prev, a, f_prev, fa, d_prev)
        ga = grad(xa, fa)
        da = float(ga @ p)
        best = (a, fa, ga)
        if abs(da) <= -cfg.c2 * d0:
            return a, fa, ga
        if da >= 0:
            return zoom(a, a_prev, fa, f_prev, da)
        a_prev, f_prev, d_prev = a, fa, da
        a = 2.0 * a
    return best


def _bfgs(fun, x, f, cfg: OptimConfig, trace):
    def grad(xx, fx):
        return numerical_gradient(fun, xx, fx, cfg.grad_step)

    n = x.size
    g = grad(x, f)
    H = np.eye(n)
    fresh = True
    message = "maximum iterations reached"
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        gnorm = float(np.max(np.abs(g))) if n else 0.0
        if not np.all(np.isfinite(g)):
            message = "non-finite gradient"
            break
        if gnorm <= cfg.grad_tol:
            converged, message = True, "gradient tolerance reached"
            it -= 1
            break
        p = -H @ g
        if g @ p >= 0:
            H, fresh = np.eye(n), True
            p = -g
        alpha = min(1.0, 1.0 / gnorm) if fresh else 1.0
        found = _line_search(fun, grad, x, f, g, p, alpha, cfg)
        if found is None:
            if not fresh:
                H, fresh = np.eye(n), True
                continue
            message = "line search failed"
            break
        a, f_new, g_new = found
        s = a * p
        x_new = x + s
        y = g_new - g
        x, f, g = x_new, f_new, g_new
        if trace is not None:
            trace.append((x.copy(), f))
        if np.max(np.abs(s)) <= cfg.step_tol * (1.0 + np.max(np.abs(x))):
            gnorm = float(np.max(np.abs(g)))
            converged = gnorm <= cfg.grad_tol
            message = "gradient tolerance reached" if converged else "step tolerance reached"
            break
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if fresh:
                H = (sy / float(y @ y)) * np.eye(n)
                fresh = False
            rho = 1.0 / sy
            Hy = H @ y
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) \
                + (rho * rho * float(y @ Hy) + rho) * np.outer(s, s)
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    return OptimResult(x, f, gnorm, it, converged, message=message)


def minimize(objective, beta0, cfg: OptimConfig | None = None) -> OptimResult:
    """Minimize ``objective`` from ``beta0``.

    Non-converged runs are restarted from a jittered copy of the best point
    up to ``cfg.restarts`` times; the best point found is always returned.

    Raises
    ------
    StartError
        If the objective is not finite at ``beta0``.
    """
    cfg = cfg or OptimConfig()
    fun = _Counted(objective)
    x0 = np.array(beta0, dtype=float)
    f0 = fun(x0)
    if not math.isfinite(f0):
        raise StartError(f"objective is not finite at the start point {x0}")
    trace = [] if cfg.keep_trace else None
    res = _bfgs(fun, x0, f0, cfg, trace)
    rng = np.random.default_rng(cfg.seed)
    used = 0
    total_iter = res.iterations
    while not res.converged and used < cfg.restarts:
        used += 1
        b = res.beta_hat
        start = b + cfg.jitter * np.maximum(1.0, np.abs(b)) * rng.standard_normal(b.size)
        fs = fun(start)
        if not math.isfinite(fs):
            start, fs = b.copy(), res.value
        nxt = _bfgs(fun, start, fs, cfg, trace)
        total_iter += nxt.iterations
        if nxt.value < res.value or (nxt.converged and nxt.value <= res.value + 1e-12):
            res = nxt
    res.iterations = total_iter
    res.n_eval = fun.n
    res.restarts_used = used
    if trace is not None:
        res.trace = trace
    return res
