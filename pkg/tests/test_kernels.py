"""Compiled kernels against their numpy twins and independent oracles."""

import math

import numpy as np
import pytest

from lsbts import kernels
from lsbts.kernels import NOT_PD_ERRORS, get_backend
from lsbts.models import step_up

BACKENDS = ["python"]
try:
    get_backend("cython")
    BACKENDS.append("cython")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def kb(request):
    return get_backend(request.param)


def _pacf(rng, T, p):
    u = np.arange(1, T + 1) / T
    base = rng.uniform(-0.8, 0.8, p)
    return np.tanh(np.arctanh(base)[None, :] + 0.5 * np.sin(3 * u)[:, None])


def test_active_backend_is_named():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(len(BACKENDS) < 2, reason="extension not built")
def test_backends_agree(rng):
    cy, py = get_backend("cython"), get_backend("python")
    T = 300
    x = rng.normal(size=T)
    for p in (1, 2, 5):
        pacf = _pacf(rng, T, p)
        ls = 0.1 * np.cos(np.arange(T) / T)
        assert cy.ar_nll_sum(x, pacf, ls) == pytest.approx(py.ar_nll_sum(x, pacf, ls), rel=1e-13)
        for a, b in zip(cy.ar_innovations(x, pacf, np.exp(ls)), py.ar_innovations(x, pacf, np.exp(ls))):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
        z = rng.normal(size=T)
        np.testing.assert_allclose(cy.ar_simulate(z, pacf, np.exp(ls)),
                                   py.ar_simulate(z, pacf, np.exp(ls)), rtol=1e-11, atol=1e-12)
    delta = 0.3 * np.sin(np.arange(T) / 50.0)
    ls = np.zeros(T)
    assert cy.fd_nll_sum(x, delta, ls, 40) == pytest.approx(py.fd_nll_sum(x, delta, ls, 40), rel=1e-13)
    g = 0.6 ** np.arange(30)[None, :] * (1 + 0.2 * np.arange(T) / T)[:, None]
    for a, b in zip(cy.ld_innovations(x, g, 29), py.ld_innovations(x, g, 29)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
    e, v = rng.normal(size=T), rng.uniform(0.5, 2, T)
    assert cy.nll_sum(e, v) == pytest.approx(py.nll_sum(e, v), rel=1e-14)


def test_nll_sum_definition(kb, rng):
    e, v = rng.normal(size=50), rng.uniform(0.5, 2, 50)
    assert kb.nll_sum(e, v) == pytest.approx(float(np.sum(np.log(v) + e**2 / v)), rel=1e-13)
    with pytest.raises(NOT_PD_ERRORS):
        kb.nll_sum(e, np.r_[v[:-1], 0.0])


def test_ar_innovations_against_direct_recursion(kb, rng):
    T, p = 40, 3
    pacf = _pacf(rng, T, p)
    x = rng.normal(size=T)
    sig = np.full(T, 1.3)
    e, v = kb.ar_innovations(x, pacf, sig)
    for t in range(T):
        m = min(t, p)
        a = step_up(pacf[t, :m]) if m else np.zeros(0)
        pred = sum(a[k] * x[t - 1 - k] for k in range(m))
        assert e[t] == pytest.approx(x[t] - pred, abs=1e-13)
        assert v[t] == pytest.approx(1.69 / np.prod(1 - pacf[t, m:] ** 2), rel=1e-13)


def test_ar_simulate_inverts_innovations(kb, rng):
    T, p = 200, 2
    pacf = _pacf(rng, T, p)
    sig = np.exp(0.2 * np.arange(T) / T)
    z = rng.normal(size=T)
    x = kb.ar_simulate(z, pacf, sig)
    e, v = kb.ar_innovations(x, pacf, sig)
    np.testing.assert_allclose(e / np.sqrt(v), z, atol=1e-11)


def test_fd_predictor_against_toeplitz_oracle(kb, frozen):
    o = frozen["fd_pred"]
    m, d = o["m"], o["delta"]
    T = m + 1
    delta = np.full(T, d)
    coeffs = np.empty(m)
    for k in range(1, m + 1):
        x = np.zeros(T)
        x[m - k] = 1.0
        e, v = kb.fd_innovations(x, delta, np.ones(T), m)
        coeffs[k - 1] = -e[m]
    np.testing.assert_allclose(coeffs, o["coeffs"], rtol=1e-13)
    c0 = math.gamma(1 - 2 * d) / math.gamma(1 - d) ** 2
    assert v[m] / c0 == pytest.approx(o["var_ratio"], rel=1e-13)
    assert v[0] == pytest.approx(c0, rel=1e-14)


def test_fd_zero_delta_is_white(kb, rng):
    x = rng.normal(size=30)
    e, v = kb.fd_innovations(x, np.zeros(30), np.full(30, 2.0), 10)
    np.testing.assert_allclose(e, x, atol=0)
    np.testing.assert_allclose(v, 4.0, rtol=1e-15)


def test_ld_innovations_matches_fd_closed_form(kb, rng):
    from lsbts.models import fd_acvf
    T, d = 60, 12
    delta = 0.35 * np.linspace(-1, 1, T)
    g = fd_acvf(delta, 1.0, d)
    x = rng.normal(size=T)
    e1, v1 = kb.ld_innovations(x, g, d)
    e2, v2 = kb.fd_innovations(x, delta, np.ones(T), d)
    np.testing.assert_allclose(e1, e2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(v1, v2, rtol=1e-10)


def test_ld_not_pd_raises(kb):
    g = np.tile([1.0, 1.0, 1.0], (5, 1))
    with pytest.raises(NOT_PD_ERRORS):
        kb.ld_innovations(np.ones(5), g, 2)


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, LSBTS_PURE_PYTHON="1")
    r = subprocess.run([sys.executable, "-c", "import lsbts; print(lsbts.BACKEND)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == "python"
