"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .estimation import fit
from .forecasting import forecast
from .inference import RankError, coefficient_ses, curve_band, fisher_info
from .kernels import NOT_PD_ERRORS
from .likelihood import ExactLikConfig, WhittleConfig, default_blocks
from .models import PRESETS, PoleError, SpectralField
from .montecarlo import (ExperimentSpec, run_experiment, size_power_study, tune_blocks,
                         write_outputs)
from .optimize import OptimConfig, StartError
from .selection import NicGrid, SelectionError, grid_search, nic, windowed_stats
from .simulation import SimConfig, simulate
from .specio import DataError, load_model, model_from_dict, read_series, write_series
from .stationarity import OptimizationFailure, test_stationarity

log = logging.getLogger("lsbts")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _model_arg(args, attr="model"):
    path = getattr(args, attr, None)
    name = getattr(args, "preset", None)
    if path and name:
        raise UsageError("give either a model spec file or --preset, not both")
    if name:
        return model_from_dict({"preset": name})
    if not path:
        raise UsageError(f"--{attr.replace('_', '-')} or --preset is required")
    return load_model(path)


def _lik_config(args, T):
    if args.likelihood == "exact":
        return ExactLikConfig(d=args.d, dense_oracle=args.dense_oracle)
    if args.N is None and args.S is None and args.taper is None:
        return default_blocks(T)
    base = default_blocks(T) if T >= 64 else None
    N = args.N or (base.N if base else None)
    S = args.S or (base.S if base else None)
    if N is None or S is None:
        raise UsageError("give --N and --S for series shorter than 64")
    return WhittleConfig(N, S, args.taper or "cosine-bell")


def _optim_config(args):
    return OptimConfig(max_iter=args.max_iter, grad_tol=args.tol, restarts=args.restarts,
                       seed=args.seed)


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


def _config_dict(cfg):
    if isinstance(cfg, ExactLikConfig):
        return {"d": cfg.d, "dense_oracle": cfg.dense_oracle}
    if isinstance(cfg, WhittleConfig):
        return {"N": cfg.N, "S": cfg.S, "taper": cfg.taper.value}
    return None


def config_from_dict(likelihood, d):
    if d is None:
        return None
    return ExactLikConfig(**d) if likelihood == "exact" else WhittleConfig(**d)


def fit_report(f, n_band: int = 101) -> dict:
    """JSON-ready description of a fit with SEs and curve bands."""
    out = {"model": f.model.to_dict(), "likelihood": f.likelihood,
           "likelihood_config": _config_dict(f.lik_config), "T": f.T, "nll": f.nll,
           "nic": nic(f, f.model.n_coef, f.T), "converged": f.converged,
           "iterations": f.optim.iterations, "gradient_norm": f.optim.grad_norm,
           "message": f.optim.message, "beta": f.beta.tolist()}
    try:
        fi = fisher_info(f.model)
        out["ses"] = coefficient_ses(fi, f.T).tolist()
        out["fisher"] = fi.matrix.tolist()
        out["off_block_norm"] = fi.off_block_norm
        u = np.linspace(0.0, 1.0, n_band)
        out["bands"] = []
        for j, role in enumerate(f.model.roles):
            b = curve_band(f.model, fi, f.T, j, u)
            out["bands"].append({"curve": j, "role": role, "u": u.tolist(),
                                 "estimate": b.estimate.tolist(), "lower": b.lower.tolist(),
                                 "upper": b.upper.tolist()})
    except RankError as exc:
        out["ses"] = None
        out["rank_error"] = str(exc)
    return out


# -- verbs ------------------------------------------------------------------------

def cmd_simulate(args):
    model = _model_arg(args)
    x = simulate(model, SimConfig(args.T, args.seed, args.path))
    if args.out:
        write_series(x, args.out)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["x"])
        for v in x:
            w.writerow([repr(float(v))])
    return EXIT_OK


def cmd_fit(args):
    model = _model_arg(args, "model_template")
    x, _ = read_series(args.data)
    f = fit(model, x, args.likelihood, _lik_config(args, x.size), _optim_config(args))
    rep = fit_report(f)
    _emit(rep, args.out)
    if args.bands_csv:
        for b in rep.get("bands", []):
            with open(f"{args.bands_csv}_curve{b['curve']}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["u", "estimate", "lower", "upper"])
                w.writerows(zip(b["u"], b["estimate"], b["lower"], b["upper"]))
    if not f.converged:
        raise NumericalFailure(f"optimizer did not converge: {f.optim.message}")
    return EXIT_OK


def cmd_test(args):
    model = _model_arg(args, "model_template")
    x, _ = read_series(args.data)
    r = test_stationarity(model, x, args.likelihood, _lik_config(args, x.size),
                          _optim_config(args))
    _emit(r.to_dict(), args.out)
    return EXIT_OK


def cmd_select(args):
    x, _ = read_series(args.data)
    try:
        with open(args.grid) as fh:
            g = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read grid {args.grid}: {exc}") from None
    if not isinstance(g, dict) or set(g) - {"candidates", "labels"} or "candidates" not in g:
        raise DataError("grid JSON must be {\"candidates\": [...], \"labels\": [...]}")
    grid = NicGrid([model_from_dict(c) for c in g["candidates"]], g.get("labels", []))
    grid = grid_search(x, grid, args.likelihood, _lik_config(args, x.size), _optim_config(args),
                       args.workers)
    ranked = grid.ranked()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "label", "b", "nll", "nic", "converged", "seconds"])
            for i, r in enumerate(ranked, 1):
                w.writerow([i, r["label"], r["b"], r["nll"], r["nic"], r["converged"],
                            f"{r['seconds']:.3f}"])
    _emit({"winner": grid.winner["label"], "results": ranked})
    return EXIT_OK


def cmd_explore(args):
    x, _ = read_series(args.data)
    ws = windowed_stats(x, args.window, args.step, args.kind, args.max_lag, args.taper)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["u", "midpoint", "frequency" if args.kind == "periodogram" else "lag",
                    "value"])
        w.writerows(ws.rows())
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_spectrum(args):
    model = _model_arg(args)
    u = np.linspace(0.0, 1.0, args.n_u)
    lam = np.linspace(0.0, np.pi, args.n_lambda + 1)[1:]
    f = SpectralField(model).sdf(u, lam)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["u", "lambda", "f"])
        for i, uu in enumerate(u):
            for j, ll in enumerate(lam):
                w.writerow([repr(float(uu)), repr(float(ll)), repr(float(f[i, j]))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_forecast(args):
    model = _model_arg(args)
    x, _ = read_series(args.data)
    fc = forecast(model, x, args.h, args.lookback, args.level, args.dense)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["step", "forecast", "sd", "lower", "upper"])
        for row in fc.rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


_EXPERIMENT_KEYS = {"kind", "generator", "template", "T", "R", "B", "seed", "estimators",
                    "whittle", "n_exponents", "s_fractions", "beta11", "alpha", "likelihood"}


def cmd_mc(args):
    try:
        with open(args.experiment) as fh:
            e = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read experiment {args.experiment}: {exc}") from None
    if not isinstance(e, dict):
        raise DataError("experiment JSON must be an object")
    extra = set(e) - _EXPERIMENT_KEYS
    if extra:
        raise DataError(f"experiment: unknown field(s) {sorted(extra)}")
    kind = e.get("kind", "accuracy")
    T_list = e.get("T", [512])
    R = e.get("R", 200)
    seed = e.get("seed", args.seed)
    if kind == "size-power":
        rows = size_power_study(T_list, e.get("beta11", [0.0]), R, seed, e.get("alpha", 0.05),
                                e.get("likelihood", "exact"), workers=args.workers)
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "size_power.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "beta11", "R", "rejections", "rate", "se", "n_nonconverged"])
            for r in rows:
                w.writerow([r["T"], r["beta11"], r["R"], r["rejections"], r["rate"], r["se"],
                            r["n_nonconverged"]])
        _emit([{k: v for k, v in r.items() if k not in ("lambdas", "p_values")} for r in rows])
        return EXIT_OK
    if "generator" not in e:
        raise DataError("experiment: 'generator' model is required")
    spec = ExperimentSpec(model_from_dict(e["generator"]), tuple(T_list), R,
                          tuple(e.get("estimators", ["exact"])),
                          model_from_dict(e["template"]) if "template" in e else None,
                          e.get("B", 1000), seed,
                          tuple(e["whittle"]) if e.get("whittle") else None,
                          workers=args.workers)
    if kind == "tune-blocks":
        surf = tune_blocks(spec, e.get("n_exponents", [0.3, 0.4, 0.5, 0.6, 0.7, 0.8]),
                           e.get("s_fractions", [0.3, 0.55, 0.8]))
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "tune_blocks.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_exponent", "s_fraction", "N", "S", "mean_rmse", "n_failed"])
            for i, ne in enumerate(surf["n_exponents"]):
                for j, sf in enumerate(surf["s_fractions"]):
                    w.writerow([ne, sf, surf["N"][i][j], surf["S"][i][j],
                                surf["mean_rmse"][i, j], surf["n_failed"][i, j]])
        _emit({"best": surf["best"], "mean_rmse": surf["mean_rmse"]})
        return EXIT_OK
    if kind != "accuracy":
        raise DataError(f"experiment: unknown kind {kind!r}")
    res = run_experiment(spec)
    write_outputs(res, args.out_dir, spec)
    _emit({f"{T}/{est}": {"sqrt_t_rmse": s.sqrt_t_rmse, "bias": s.bias, "n_failed": s.n_failed}
           for (T, est), s in sorted(res.items())})
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _add_fit_flags(p):
    p.add_argument("--likelihood", choices=["exact", "whittle"], default="exact")
    p.add_argument("--d", type=int, default=None, help="predictor order cap (FD/Exp)")
    p.add_argument("--dense-oracle", action="store_true", help="exact O(T^3) likelihood")
    p.add_argument("--N", type=int, default=None, help="Whittle block length")
    p.add_argument("--S", type=int, default=None, help="Whittle block step")
    p.add_argument("--taper", choices=["cosine-bell", "flat"], default=None)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8, help="gradient tolerance")
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lsbts", description="Locally stationary basis time series models.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="verb", parser_class=_Parser)
    presets = sorted(PRESETS)

    p = sub.add_parser("simulate", help="simulate a series")
    p.add_argument("--model")
    p.add_argument("--preset", choices=presets)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path", choices=["recursive-ar", "dense-gaussian"], default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    for verb, func, text in (("fit", cmd_fit, "fit a model template"),
                             ("test", cmd_test, "test for stationarity")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--model-template")
        p.add_argument("--preset", choices=presets)
        p.add_argument("--data", required=True)
        p.add_argument("--out")
        if verb == "fit":
            p.add_argument("--bands-csv", help="prefix for per-curve band CSVs")
        _add_fit_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("select", help="NIC grid search")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=None)
    _add_fit_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("explore", help="windowed ACF/PACF/periodogram")
    p.add_argument("--data", required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--kind", choices=["acf", "pacf", "periodogram"], default="periodogram")
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--taper", choices=["cosine-bell", "flat"], default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("spectrum", help="time-varying spectrum on a (u, lambda) grid")
    p.add_argument("--model")
    p.add_argument("--preset", choices=presets)
    p.add_argument("--n-u", type=int, default=51)
    p.add_argument("--n-lambda", type=int, default=128)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("forecast", help="h-step forecasts")
    p.add_argument("--model", help="model spec or fit result JSON")
    p.add_argument("--preset", choices=presets)
    p.add_argument("--data", required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--lookback", type=int, default=None)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--dense", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("mc", help="Monte Carlo experiment")
    p.add_argument("--experiment", required=True)
    p.add_argument("--out-dir", default="mc_out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_mc)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if not args.verb:
            raise UsageError("a verb is required (see --help)")
        if getattr(args, "verb", None) == "explore" and args.step is None:
            args.step = max(1, args.window // 2)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, StartError, RankError, OptimizationFailure, SelectionError,
            PoleError, *NOT_PD_ERRORS) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid sizes or configurations caught after parsing
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
