"""Strict JSON model specs and CSV series input."""

from __future__ import annotations

import csv
import json
import logging
import math

import numpy as np

from .basis import BasisSet, LinkFunction, ParameterCurveSpec
from .models import Family, LsbModelSpec, _ROLE_LINK, preset

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed input data or configuration."""


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object")
    extra = set(obj) - set(allowed)
    if extra:
        raise DataError(f"{where}: unknown field(s) {sorted(extra)}")


def model_from_dict(d: dict) -> LsbModelSpec:
    """Build a model from its JSON form (see ``docs/model_spec.schema.json``)."""
    _check_keys(d, {"preset", "family", "p", "curves", "name", "coefficients"}, "model")
    if "preset" in d:
        _check_keys(d, {"preset", "coefficients"}, "model")
        try:
            m = preset(d["preset"])
        except KeyError as exc:
            raise DataError(str(exc)) from None
        if "coefficients" in d:
            m = m.with_beta(d["coefficients"])
        return m
    try:
        family = Family(d["family"])
        raw_curves = d["curves"]
    except (KeyError, ValueError) as exc:
        raise DataError(f"model: missing or invalid family/curves ({exc})") from None
    if not isinstance(raw_curves, list) or not raw_curves:
        raise DataError("model: 'curves' must be a non-empty list")
    curves = []
    for i, c in enumerate(raw_curves):
        where = f"model.curves[{i}]"
        _check_keys(c, {"role", "basis", "link", "coefficients"}, where)
        try:
            b = c.get("basis", {"kind": "constant", "size": 1})
            _check_keys(b, {"kind", "size", "knots"}, where + ".basis")
            basis = BasisSet(b["kind"], b.get("size", 1), tuple(b.get("knots", ())))
            role = c.get("role")
            link = c.get("link") or (_ROLE_LINK[role].value if role in _ROLE_LINK else None)
            if link is None:
                raise DataError(f"{where}: give a link or a role")
            curves.append(ParameterCurveSpec(basis, LinkFunction(link),
                                             tuple(c.get("coefficients", ()))))
        except DataError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise DataError(f"{where}: {exc}") from None
    try:
        m = LsbModelSpec(family, tuple(curves), d.get("name", ""))
    except ValueError as exc:
        raise DataError(f"model: {exc}") from None
    if "p" in d and d["p"] != m.p:
        raise DataError(f"model: p={d['p']} does not match {m.p} curves")
    for role, c in zip(m.roles, raw_curves):
        if c.get("role") not in (None, role):
            raise DataError(f"model: curve role {c['role']!r} where {role!r} expected")
    return m


def load_model(path: str) -> LsbModelSpec:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model spec {path}: {exc}") from None
    if isinstance(d, dict) and "model" in d and "family" not in d and "preset" not in d:
        d = d["model"]  # a fit result file
    return model_from_dict(d)


def save_model(model: LsbModelSpec, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_series(path: str) -> tuple[np.ndarray, dict]:
    """Read a one-column CSV (optional header, optional leading time column).

    Returns the series and metadata ``{"column", "n", "ignored"}``.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise DataError(f"{path}: empty file")
    header = None
    if not all(_is_number(c) for c in rows[0] if c.strip()) or not any(c.strip() for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        first_line = 2
    else:
        body = rows
        first_line = 1
    width = len(header) if header else len(body[0]) if body else 0
    if width == 0 or not body:
        raise DataError(f"{path}: no data rows")
    if width > 2:
        raise DataError(f"{path}: {width} columns; expected one series column "
                        "(optionally preceded by a time column)")
    col = width - 1
    if header and "x" in header:
        col = header.index("x")
    ignored = [i for i in range(width) if i != col]
    if ignored:
        name = header[ignored[0]] if header else "column 1"
        log.warning("ignoring column %r of %s", name, path)
    vals = np.empty(len(body))
    for i, row in enumerate(body):
        line = first_line + i
        if not any(c.strip() for c in row):
            raise DataError(f"{path}: blank line {line}")
        if len(row) != width:
            raise DataError(f"{path}: line {line} has {len(row)} fields, expected {width}")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}: line {line}, column {col + 1}: non-numeric value {cell!r}") \
                from None
        if not math.isfinite(v):
            raise DataError(f"{path}: line {line}, column {col + 1}: missing or non-finite value")
        vals[i] = v
    meta = {"column": header[col] if header else col, "n": vals.size,
            "ignored": [header[i] if header else i for i in ignored]}
    return vals, meta


def write_series(x, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"])
        for v in x:
            w.writerow([repr(float(v))])
