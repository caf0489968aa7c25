import math

import numpy as np
import pytest

from lsbts.basis import BasisSet
from lsbts.forecasting import forecast
from lsbts.models import ar_model, fd_model, lsbar1_design, preset, white_noise
from lsbts.simulation import SimConfig, simulate

LIN = BasisSet("raw-polynomial", 2)


def test_white_noise():
    m = white_noise(LIN, beta=[0.1, 0.5])
    fc = forecast(m, np.ones(50), 4)
    np.testing.assert_array_equal(fc.mean, 0.0)
    np.testing.assert_allclose(fc.sd, math.exp(0.6), rtol=1e-14)


def test_ar1_classical_formulas():
    phi, s2 = 0.5, 1.3
    m = ar_model(1, beta=[2 * math.atanh(phi), 0.5 * math.log(s2)])
    x = simulate(m, SimConfig(200, seed=1))
    h = np.arange(1, 8)
    fc = forecast(m, x, 7)
    np.testing.assert_allclose(fc.mean, phi**h * x[-1], rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(fc.sd**2, s2 * (1 - phi ** (2 * h)) / (1 - phi**2), rtol=1e-10)


@pytest.mark.parametrize("model", [ar_model(2, beta=[1.0, -0.6, 0.2]),
                                   fd_model(beta=[0.5, 0.0])])
def test_constant_models_match_full_sample_blp(model):
    T = 300
    x = simulate(model, SimConfig(T, seed=4))
    a = forecast(model, x, 3, lookback=T)
    b = forecast(model, x, 3, dense=True)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.sd, b.sd, rtol=1e-10)


def test_interval_and_rows():
    fc = forecast(white_noise(), np.zeros(20), 2, level=0.9)
    rows = list(fc.rows())
    assert rows[0][0] == 1 and len(rows) == 2
    assert fc.upper[0] == pytest.approx(1.6448536269514722, rel=1e-12)


def test_horizon_validation():
    with pytest.raises(ValueError):
        forecast(white_noise(), np.zeros(20), 0)


def test_one_step_coverage_and_optimality():
    m = preset("ar2-to-ar1")
    T, R = 2048, 500
    hits, se_model, se_naive = 0, [], []
    for r in range(R):
        x = simulate(m, SimConfig(T + 1, seed=70, replication=r))
        # the model over T + 1 points frozen at u = 1 differs from the T-point one by O(1/T)
        fc = forecast(m, x[:T], 1)
        hits += fc.lower[0] <= x[T] <= fc.upper[0]
        se_model.append((x[T] - fc.mean[0]) ** 2)
        se_naive.append((x[T] - x[T - 1]) ** 2)
    assert abs(hits / R - 0.95) <= 0.03
    diff = np.array(se_naive) - np.array(se_model)
    assert diff.mean() > -3 * diff.std() / math.sqrt(R)


def test_naive_predictor_loses_for_lsbar1():
    m = lsbar1_design(0.0, 1.5)
    T, R = 1024, 300
    d = []
    for r in range(R):
        x = simulate(m, SimConfig(T + 1, seed=71, replication=r))
        fc = forecast(m, x[:T], 1)
        d.append((x[T] - x[T - 1]) ** 2 - (x[T] - fc.mean[0]) ** 2)
    d = np.array(d)
    assert d.mean() > -3 * d.std() / math.sqrt(R)
