"""Monte Carlo harness: estimator accuracy, Whittle block tuning, test size and power.

Every replication draws its series from a seed derived from
``(master seed, T, replication)``, so results do not depend on the worker
count, and all estimators of one replication see the same series.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .estimation import fit
from .likelihood import WhittleConfig, default_blocks
from .models import LsbModelSpec, lsbar1_design
from .optimize import OptimConfig
from .parallel import pmap
from .simulation import SimConfig, derive_seed, simulate
from .stationarity import test_stationarity

ESTIMATORS = ("exact", "whittle")


def replication_seed(master: int, T: int, rep: int) -> int:
    return derive_seed(derive_seed(master, T), rep)


def whittle_blocks(T: int, n_exponent: float | None = None,
                   s_fraction: float | None = None) -> WhittleConfig:
    """Block layout ``N ~ T^n_exponent`` (even), ``S ~ s_fraction * N``; defaults otherwise."""
    if n_exponent is None and s_fraction is None:
        return default_blocks(T)
    base = default_blocks(T) if T >= 64 else None
    if n_exponent is None:
        N = base.N
    else:
        N = max(2, 2 * int(math.floor(T**n_exponent / 2.0 + 0.5)))
    frac = 0.35 if s_fraction is None else s_fraction
    S = min(N, max(1, int(math.floor(frac * N + 0.5))))
    return WhittleConfig(N, S)


@dataclass(frozen=True)
class ExperimentSpec:
    """A replication study of one generator.

    ``template`` is the model fitted to each series (the generator itself
    by default); ``whittle`` optionally fixes ``(N exponent, S fraction)``.
    """

    generator: LsbModelSpec
    T_list: tuple
    R: int
    estimators: tuple = ("exact",)
    template: LsbModelSpec | None = None
    B: int = 1000
    seed: int = 0
    whittle: tuple | None = None
    optim: OptimConfig | None = None
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "T_list", tuple(int(t) for t in self.T_list))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.R < 2:
            raise ValueError("need R >= 2 replications")
        if not self.T_list:
            raise ValueError("empty T list")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad or not self.estimators:
            raise ValueError(f"unknown estimators {sorted(bad)}")
        if self.template is not None and self.template.n_coef != self.generator.n_coef:
            raise ValueError("template and generator must have the same coefficient layout")

    @property
    def fit_model(self) -> LsbModelSpec:
        return self.template or self.generator


@dataclass
class McSummary:
    T: int
    estimator: str
    beta0: np.ndarray
    estimates: np.ndarray  # (R, b), NaN rows for failed replications
    ok: np.ndarray
    bias: np.ndarray
    rmse: np.ndarray
    sqrt_t_rmse: np.ndarray
    ci: dict = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return int(self.ok.size)

    @property
    def n_failed(self) -> int:
        return int(np.sum(~self.ok))

    def to_dict(self) -> dict:
        return {"T": self.T, "estimator": self.estimator, "beta0": self.beta0.tolist(),
                "n_reps": self.n_reps, "n_failed": self.n_failed,
                "bias": self.bias.tolist(), "rmse": self.rmse.tolist(),
                "sqrt_t_rmse": self.sqrt_t_rmse.tolist(),
                "ci": {k: [v[0].tolist(), v[1].tolist()] for k, v in self.ci.items()}}


def summarize(estimates, ok, beta0, T: int, estimator: str, B: int = 1000,
              seed: int = 0) -> McSummary:
    """Bias, RMSE and sqrt(T) RMSE with percentile bootstrap CIs over replications."""
    est = np.asarray(estimates, dtype=float)
    ok = np.asarray(ok, bool)
    beta0 = np.asarray(beta0, dtype=float)
    good = est[ok] - beta0
    b = beta0.size
    if good.shape[0] == 0:
        nan = np.full(b, np.nan)
        return McSummary(T, estimator, beta0, est, ok, nan, nan, nan, {})
    bias = good.mean(axis=0)
    rmse = np.sqrt((good**2).mean(axis=0))
    ci = {}
    if B > 0 and good.shape[0] > 1:
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, T)))
        idx = rng.integers(0, good.shape[0], size=(B, good.shape[0]))
        boot = good[idx]  # (B, n, b)
        stats = {"bias": (boot.mean(axis=1), bias),
                 "rmse": (np.sqrt((boot**2).mean(axis=1)), rmse)}
        stats["sqrt_t_rmse"] = (np.sqrt(T) * stats["rmse"][0], np.sqrt(T) * rmse)
        for name, (draws, point) in stats.items():
            lo, hi = np.percentile(draws, [2.5, 97.5], axis=0)
            ci[name] = (np.minimum(lo, point), np.maximum(hi, point))
    return McSummary(T, estimator, beta0, est, ok, bias, rmse, np.sqrt(T) * rmse, ci)


def _one_replication(job, spec: ExperimentSpec):
    T, rep = job
    x = simulate(spec.generator, SimConfig(T, replication_seed(spec.seed, T, rep)))
    model = spec.fit_model
    out = {}
    for est in spec.estimators:
        cfg = None
        if est == "whittle":
            cfg = whittle_blocks(T, *(spec.whittle or (None, None)))
        try:
            f = fit(model, x, est, cfg, spec.optim)
            out[est] = (f.beta, f.converged)
        except Exception:
            out[est] = (np.full(model.n_coef, np.nan), False)
    return out


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run all replications; returns ``{(T, estimator): McSummary}``.

    Non-converged or failed fits are excluded from the summaries and
    counted in ``n_failed``.
    """
    jobs = [(T, r) for T in spec.T_list for r in range(spec.R)]
    res = pmap(partial(_one_replication, spec=spec), jobs, spec.workers)
    out = {}
    beta0 = spec.generator.beta
    for T in spec.T_list:
        rows = [r for (t, _), r in zip(jobs, res) if t == T]
        for est in spec.estimators:
            E = np.array([r[est][0] for r in rows])
            ok = np.array([r[est][1] for r in rows]) & np.all(np.isfinite(E), axis=1)
            out[(T, est)] = summarize(E, ok, beta0, T, est, spec.B, spec.seed)
    return out


def _tune_replication(rep, spec, T, cells):
    x = simulate(spec.generator, SimConfig(T, replication_seed(spec.seed, T, rep)))
    out = []
    for cfg in cells:
        if cfg is None:
            out.append((np.full(spec.fit_model.n_coef, np.nan), False))
            continue
        try:
            f = fit(spec.fit_model, x, "whittle", cfg, spec.optim)
            out.append((f.beta, f.converged))
        except Exception:
            out.append((np.full(spec.fit_model.n_coef, np.nan), False))
    return out


def tune_blocks(spec: ExperimentSpec, n_exponents, s_fractions, T: int | None = None) -> dict:
    """Mean Whittle RMSE over coefficients on an (N exponent, S fraction) grid.

    All cells share the same simulated series. Cells with ``N > T`` are
    skipped and reported as NaN.
    """
    T = T or spec.T_list[0]
    n_exponents, s_fractions = list(n_exponents), list(s_fractions)
    if not n_exponents or not s_fractions:
        raise ValueError("empty tuning grid")
    cells, layout = [], []
    for e in n_exponents:
        for f in s_fractions:
            cfg = whittle_blocks(T, e, f)
            feasible = cfg.N <= T and cfg.n_blocks(T) >= 1
            cells.append(cfg if feasible else None)
            layout.append((e, f, cfg.N, cfg.S))
    res = pmap(partial(_tune_replication, spec=spec, T=T, cells=cells), range(spec.R),
               spec.workers)
    surface = np.full((len(n_exponents), len(s_fractions)), np.nan)
    failed = np.zeros_like(surface, dtype=int)
    beta0 = spec.generator.beta
    for c, (e, f, N, S) in enumerate(layout):
        i, j = divmod(c, len(s_fractions))
        if cells[c] is None:
            continue
        E = np.array([r[c][0] for r in res])
        ok = np.array([r[c][1] for r in res]) & np.all(np.isfinite(E), axis=1)
        s = summarize(E, ok, beta0, T, "whittle", B=0)
        surface[i, j] = float(np.mean(s.rmse))
        failed[i, j] = s.n_failed
    i, j = np.unravel_index(np.nanargmin(surface), surface.shape)
    return {"T": T, "n_exponents": n_exponents, "s_fractions": s_fractions,
            "N": [[layout[a * len(s_fractions) + b][2] for b in range(len(s_fractions))]
                  for a in range(len(n_exponents))],
            "S": [[layout[a * len(s_fractions) + b][3] for b in range(len(s_fractions))]
                  for a in range(len(n_exponents))],
            "mean_rmse": surface, "n_failed": failed,
            "best": {"n_exponent": n_exponents[i], "s_fraction": s_fractions[j],
                     "log_n_over_log_t": math.log(layout[i * len(s_fractions) + j][2]) / math.log(T)}}


def _test_replication(job, seed, likelihood, optim, beta10, beta20):
    T, b11, rep = job
    design = lsbar1_design(beta10, b11, beta20)
    x = simulate(design, SimConfig(T, replication_seed(derive_seed(seed, int(round(b11 * 1e6))), T, rep)))
    try:
        r = test_stationarity(design, x, likelihood, None, optim)
        return r.lam, r.p_value, r.converged
    except Exception:
        return math.nan, math.nan, False


def size_power_study(T_list, beta11_list, R: int, seed: int = 0, alpha: float = 0.05,
                     likelihood: str = "exact", beta10: float = 1.0, beta20: float = 0.0,
                     optim: OptimConfig | None = None, workers: int | None = None) -> list:
    """Rejection rates of the stationarity test on the LSB-AR(1) design.

    Returns one row per ``(T, beta11)`` with the rejection count, rate,
    binomial SE and the raw statistics. Replications whose test failed are
    counted as non-rejections and reported in ``n_failed``.
    """
    jobs = [(T, b, r) for T in T_list for b in beta11_list for r in range(R)]
    res = pmap(partial(_test_replication, seed=seed, likelihood=likelihood, optim=optim,
                       beta10=beta10, beta20=beta20), jobs, workers)
    rows = []
    for T in T_list:
        for b in beta11_list:
            sel = [v for (t, bb, _), v in zip(jobs, res) if t == T and bb == b]
            lam = np.array([v[0] for v in sel])
            pv = np.array([v[1] for v in sel])
            rej = int(np.sum(pv < alpha))
            rate = rej / R
            rows.append({"T": T, "beta11": b, "R": R, "rejections": rej, "rate": rate,
                         "se": math.sqrt(max(rate * (1 - rate), 1e-12) / R),
                         "n_nonconverged": int(sum(not v[2] for v in sel)),
                         "n_failed": int(np.sum(~np.isfinite(lam))),
                         "lambdas": lam, "p_values": pv})
    return rows


def write_outputs(results: dict, out_dir: str, spec: ExperimentSpec | None = None) -> None:
    """Per-replication CSV plus summary JSON and a plot-ready RMSE CSV."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "replications.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "estimator", "replication", "coefficient", "estimate", "ok"])
        for (T, est), s in sorted(results.items()):
            for r, row in enumerate(s.estimates):
                for k, v in enumerate(row):
                    w.writerow([T, est, r, k, repr(float(v)), int(s.ok[r])])
    with open(os.path.join(out_dir, "summary_curves.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "estimator", "coefficient", "bias", "rmse", "sqrt_t_rmse"])
        for (T, est), s in sorted(results.items()):
            for k in range(s.beta0.size):
                w.writerow([T, est, k, repr(float(s.bias[k])), repr(float(s.rmse[k])),
                            repr(float(s.sqrt_t_rmse[k]))])
    summary = {"results": [s.to_dict() for _, s in sorted(results.items())]}
    if spec is not None:
        summary["experiment"] = {"generator": spec.generator.to_dict(), "T": list(spec.T_list),
                                 "R": spec.R, "B": spec.B, "seed": spec.seed,
                                 "estimators": list(spec.estimators)}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
