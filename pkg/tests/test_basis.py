import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsbts.basis import (BasisKind, BasisSet, DomainError, LinkFunction, ParameterCurveSpec,
                         curve_gradient, eval_basis, eval_curve, grid_matrix)

KINDS = [(BasisKind.CONSTANT, 1), (BasisKind.RAW_POLYNOMIAL, 4),
         (BasisKind.ORTHOGONAL_POLYNOMIAL, 5), (BasisKind.FOURIER, 5),
         (BasisKind.NATURAL_CUBIC_SPLINE, 6), (BasisKind.SHIFTED_QUADRATIC, 3)]
LINKS = ["log", "shifted-logit-pacf", "shifted-logit-fd"]


def invlogit(x):
    return 1.0 / (1.0 + math.exp(-x))


def test_constant_basis():
    assert eval_basis(BasisSet("constant", 1), 0.37).tolist() == [1.0]


def test_raw_polynomial():
    np.testing.assert_allclose(eval_basis(BasisSet("raw-polynomial", 3), 0.5), [1, 0.5, 0.25])


def test_orthogonal_polynomial_at_zero():
    # shifted Legendre P_k(2u - 1) scaled by sqrt(2k + 1); P_k(-1) = (-1)^k
    w = eval_basis(BasisSet("orthogonal-polynomial", 3), 0.0)
    np.testing.assert_allclose(w, [1.0, -math.sqrt(3.0), math.sqrt(5.0)], rtol=1e-14)


def test_fourier_layout():
    w = eval_basis(BasisSet("fourier", 5), 0.125)
    r2 = math.sqrt(2)
    expect = [1, r2 * math.cos(math.pi / 4), r2 * math.sin(math.pi / 4),
              r2 * math.cos(math.pi / 2), r2 * math.sin(math.pi / 2)]
    np.testing.assert_allclose(w, expect, atol=1e-15)


@pytest.mark.parametrize("kind,size", KINDS)
def test_first_function_is_constant(kind, size):
    u = np.linspace(0, 1, 33)
    W = BasisSet(kind, size).matrix(u)
    assert W.shape == (33, size)
    np.testing.assert_array_equal(W[:, 0], 1.0)


def test_orthogonal_polynomial_orthonormal():
    x, w = np.polynomial.legendre.leggauss(40)
    u, w = 0.5 * (x + 1), 0.5 * w
    W = BasisSet("orthogonal-polynomial", 6).matrix(u)
    G = (W * w[:, None]).T @ W
    np.testing.assert_allclose(G, np.eye(6), atol=1e-10)


def test_spline_knots_and_validation():
    b = BasisSet("natural-cubic-spline", 6)
    k = np.asarray(b.knots)
    assert np.all(np.diff(k) > 0) and k[0] > 0 and k[-1] < 1
    with pytest.raises(ValueError):
        BasisSet("natural-cubic-spline", 5, (0.5, 0.2, 0.7))
    with pytest.raises(ValueError):
        BasisSet("constant", 2)


def test_spline_is_c2_at_knots():
    b = BasisSet("natural-cubic-spline", 5)
    beta = np.array([0.3, 1.0, -2.0, 0.5, 1.5])
    for knot in b.knots:
        gaps = []
        for eps in (1e-3, 5e-4):
            y = b.matrix(knot + eps * np.arange(-2, 3)) @ beta
            assert abs(y[3] - y[2]) < 10 * eps  # continuity
            left = (y[2] - 2 * y[1] + y[0]) / eps**2
            right = (y[4] - 2 * y[3] + y[2]) / eps**2
            gaps.append(abs(left - right))
        # one-sided second derivatives meet at the knot, linearly in eps
        assert gaps[1] < 0.6 * gaps[0] + 1e-6


def test_domain_error():
    with pytest.raises(DomainError):
        eval_basis(BasisSet("raw-polynomial", 2), 1.5)


def test_grid_matrix_matches_rows():
    b = BasisSet("orthogonal-polynomial", 3)
    G = grid_matrix(b, 10)
    np.testing.assert_allclose(G, b.matrix(np.arange(1, 11) / 10))


def test_fd_link_example(frozen):
    spec = ParameterCurveSpec(BasisSet("raw-polynomial", 2), LinkFunction("shifted-logit-fd"),
                              (0.1, 2.5))
    assert eval_curve(spec, 0.0) == pytest.approx(frozen["fd_delta0"], abs=1e-15)
    assert eval_curve(spec, 0.0) == pytest.approx(0.02498, abs=1e-5)


def test_log_link_zero():
    spec = ParameterCurveSpec(BasisSet("constant", 1), LinkFunction("log"), (0.0,))
    assert eval_curve(spec, 0.81) == 1.0
    np.testing.assert_allclose(curve_gradient(spec, 0.81), [1.0])


def test_pacf_link_example(frozen):
    spec = ParameterCurveSpec(BasisSet("shifted-quadratic", 3), LinkFunction("shifted-logit-pacf"),
                              (0.61, 1.71, -1.27))
    assert eval_curve(spec, 1.0) == pytest.approx(frozen["pacf_u1"], abs=1e-14)


def test_pacf_gradient_at_zero():
    spec = ParameterCurveSpec(BasisSet("raw-polynomial", 2), LinkFunction("shifted-logit-pacf"),
                              (0.0, 0.0))
    np.testing.assert_allclose(curve_gradient(spec, 0.5), [0.5, 0.25], rtol=1e-14)


@pytest.mark.parametrize("link", LINKS)
def test_link_round_trip(link, rng):
    f = LinkFunction(link)
    lo, hi = f.range
    lo, hi = max(lo, -1e3), min(hi, 1e3)
    x = rng.uniform(lo, hi, 10_000)
    x = x[(x > lo) & (x < hi)]
    if link == "log":
        x = np.exp(rng.uniform(-20, 20, 10_000))
        np.testing.assert_allclose(f.inverse(f.forward(x)), x, rtol=1e-12)
    else:
        # the clamp near the edge keeps |x| a hair inside the range
        x = x[np.abs(x) < 0.999999 * hi]
        assert np.max(np.abs(f.inverse(f.forward(x)) - x)) < 1e-12


@pytest.mark.parametrize("link", LINKS)
def test_link_derivative_positive_and_analytic(link):
    f = LinkFunction(link)
    eta = np.linspace(-30, 30, 601)
    d = f.inverse_derivative(eta)
    assert np.all(d > 0)
    mid = eta[np.abs(eta) < 8]
    fd = (f.inverse(mid + 1e-6) - f.inverse(mid - 1e-6)) / 2e-6
    np.testing.assert_allclose(f.inverse_derivative(mid), fd, rtol=1e-6)


def test_link_forward_rejects_out_of_range():
    with pytest.raises(DomainError):
        LinkFunction("shifted-logit-fd").forward(0.5)
    with pytest.raises(DomainError):
        LinkFunction("log").forward(-1.0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KINDS[1:]), st.sampled_from(LINKS),
       st.lists(st.floats(-10, 10), min_size=6, max_size=6), st.floats(0.0, 1.0))
def test_range_confinement(kind_size, link, beta, u):
    kind, size = kind_size
    spec = ParameterCurveSpec(BasisSet(kind, size), LinkFunction(link), tuple(beta[:size]))
    lo, hi = spec.link.range
    v = eval_curve(spec, u)
    assert lo < v < hi


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KINDS), st.sampled_from(LINKS),
       st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.floats(0.01, 0.99))
def test_gradient_matches_central_difference(kind_size, link, beta, u):
    kind, size = kind_size
    spec = ParameterCurveSpec(BasisSet(kind, size), LinkFunction(link), tuple(beta[:size]))
    g = curve_gradient(spec, u)
    b0 = np.asarray(beta[:size])
    fd = np.empty(size)
    for i in range(size):
        e = np.zeros(size)
        e[i] = 1e-6
        fd[i] = (eval_curve(spec.with_coefficients(b0 + e), u)
                 - eval_curve(spec.with_coefficients(b0 - e), u)) / 2e-6
    scale = max(np.max(np.abs(g)), 1e-8)
    assert np.max(np.abs(g - fd)) <= 1e-5 * scale + 1e-9
