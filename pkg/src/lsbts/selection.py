"""Model selection by NIC and windowed exploratory statistics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .estimation import sample_acvf
from .levinson import levinson_durbin
from .likelihood import taper_weights
from .models import LsbModelSpec
from .parallel import pmap


class SelectionError(RuntimeError):
    """No candidate model could be fitted."""


def nic(fit_or_value, b_total: int, T: int) -> float:
    """``NIC = L_T(beta_hat) + b / T`` with ``L_T`` the normalized objective."""
    value = getattr(fit_or_value, "nll", getattr(fit_or_value, "value", fit_or_value))
    return float(value) + b_total / T


@dataclass
class NicGrid:
    """Candidate models and, after :func:`grid_search`, their ranked results."""

    candidates: list
    labels: list = field(default_factory=list)
    results: list = field(default_factory=list)

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("empty candidate grid")
        if not self.labels:
            self.labels = [describe(m) for m in self.candidates]
        if len(self.labels) != len(self.candidates):
            raise ValueError("one label per candidate")

    @property
    def winner(self):
        ok = [r for r in self.results if r["converged"] and np.isfinite(r["nic"])]
        if not ok:
            raise SelectionError("no candidate converged")
        return min(ok, key=lambda r: r["nic"])

    def ranked(self) -> list:
        return sorted(self.results, key=lambda r: (not r["converged"], r["nic"]))


def describe(model: LsbModelSpec) -> str:
    sizes = "/".join(str(c.basis.size) for c in model.curves)
    order = f"({model.p})" if model.p else ""
    return f"{model.family.value}{order} b={sizes}"


def _fit_candidate(item, x, likelihood, lik_config, optim_config):
    from .estimation import fit

    label, model = item
    t0 = time.perf_counter()
    try:
        f = fit(model, x, likelihood, lik_config, optim_config)
    except Exception as exc:  # one bad candidate must not abort the sweep
        return {"label": label, "nic": np.inf, "nll": np.inf, "b": model.n_coef,
                "converged": False, "seconds": time.perf_counter() - t0,
                "error": str(exc), "beta": None}
    return {"label": label, "nic": nic(f, model.n_coef, f.T), "nll": f.nll, "b": model.n_coef,
            "converged": f.converged, "seconds": time.perf_counter() - t0, "error": "",
            "beta": f.beta.tolist()}


def grid_search(x, grid: NicGrid, likelihood: str = "exact", lik_config=None,
                optim_config=None, workers: int | None = 1) -> NicGrid:
    """Fit every candidate, fill ``grid.results`` and return the grid.

    Raises
    ------
    SelectionError
        If no candidate converged.
    """
    x = np.asarray(x, dtype=float)
    job = partial(_fit_candidate, x=x, likelihood=likelihood, lik_config=lik_config,
                  optim_config=optim_config)
    grid.results = pmap(job, list(zip(grid.labels, grid.candidates)), workers)
    grid.winner  # raises if nothing converged
    return grid


@dataclass
class WindowedStats:
    kind: str
    midpoints: np.ndarray  # 0-based index of each segment midpoint
    u: np.ndarray
    index: np.ndarray  # lags (acf/pacf) or frequencies (periodogram)
    values: np.ndarray  # (n_segments, len(index))

    def rows(self):
        for i, t in enumerate(self.midpoints):
            for j, k in enumerate(self.index):
                yield float(self.u[i]), int(t), float(k), float(self.values[i, j])


def windowed_stats(x, window: int, step: int, kind: str = "acf", max_lag: int = 20,
                   taper: str | None = None) -> WindowedStats:
    """Sample ACF, PACF or periodogram on sliding segments.

    Each segment's statistic is assigned to its midpoint
    ``start + window // 2``. ACF and PACF use the demeaned segment and the
    biased autocovariance; the periodogram is ``(1/2 pi) |sum tau_s x_s
    e^{-i lam s}|^2`` over ``lam = 2 pi k / window``, ``k = 0..window//2``,
    with a unit-energy taper (flat by default).
    """
    x = np.asarray(x, dtype=float)
    T = x.size
    if window > T or window < 2:
        raise ValueError(f"window must lie in [2, T={T}]")
    if step < 1:
        raise ValueError("step must be positive")
    starts = np.arange(0, T - window + 1, step)
    mids = starts + window // 2
    out = []
    if kind in ("acf", "pacf"):
        L = min(max_lag, window - 1)
        index = np.arange(L + 1) if kind == "acf" else np.arange(1, L + 1)
        for s in starts:
            seg = x[s: s + window]
            g = sample_acvf(seg - seg.mean(), L)
            if kind == "acf":
                out.append(g / g[0])
            else:
                out.append(levinson_durbin(g, L)[2])
    elif kind == "periodogram":
        tau = taper_weights(window, taper or "flat")
        index = 2.0 * np.pi * np.arange(window // 2 + 1) / window
        for s in starts:
            F = np.fft.rfft(x[s: s + window] * tau)
            out.append(np.abs(F) ** 2 / (2.0 * np.pi))
    else:
        raise ValueError("kind must be 'acf', 'pacf' or 'periodogram'")
    return WindowedStats(kind, mids, mids / T, index, np.array(out))
