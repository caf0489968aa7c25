import numpy as np
import pytest
from statsmodels.tsa.stattools import acf as sm_acf
from statsmodels.tsa.stattools import pacf as sm_pacf

from lsbts.basis import BasisSet
from lsbts.models import ar_model, lsbar1_design, preset, white_noise
from lsbts.selection import NicGrid, SelectionError, describe, grid_search, nic, windowed_stats
from lsbts.simulation import SimConfig, simulate

LIN = BasisSet("raw-polynomial", 2)


def test_nic_penalty_monotone():
    assert nic(1.3, 5, 100) > nic(1.3, 4, 100)
    assert nic(1.3, 4, 100) == pytest.approx(1.34)


def test_nic_ranking_shift_invariant():
    vals = [1.2, 1.19, 1.25]
    bs = [2, 4, 1]
    r1 = np.argsort([nic(v, b, 300) for v, b in zip(vals, bs)])
    r2 = np.argsort([nic(v + 7.5, b, 300) for v, b in zip(vals, bs)])
    assert r1.tolist() == r2.tolist()


def test_single_candidate_wins():
    x = simulate(white_noise(), SimConfig(200, seed=1))
    g = grid_search(x, NicGrid([white_noise()]))
    assert g.winner["label"] == describe(white_noise())


def test_failing_candidate_is_isolated():
    x = simulate(white_noise(), SimConfig(200, seed=1))
    # exact likelihood needs T >= 2p + 2, so the AR(200) candidate fails
    grid = NicGrid([white_noise(), ar_model(200)], ["wn", "ar200"])
    g = grid_search(x, grid)
    bad = [r for r in g.results if r["label"] == "ar200"][0]
    assert not bad["converged"] and bad["error"]
    assert g.winner["label"] == "wn"


def test_all_candidates_fail():
    with pytest.raises(SelectionError):
        grid_search(np.zeros(20), NicGrid([ar_model(30)]))


def test_grid_validation():
    with pytest.raises(ValueError):
        NicGrid([])
    with pytest.raises(ValueError):
        NicGrid([white_noise()], ["a", "b"])


def test_results_independent_of_workers():
    x = simulate(preset("ar2-to-ar1"), SimConfig(512, seed=2))
    cands = [ar_model(p, LIN) for p in (1, 2)]
    a = grid_search(x, NicGrid(list(cands)), workers=1).results
    b = grid_search(x, NicGrid(list(cands)), workers=2).results
    assert [r["nic"] for r in a] == [r["nic"] for r in b]


def test_order_sweep_picks_two():
    m = ar_model(2, beta=[1.0, -0.8, 0.0])
    wins = 0
    for r in range(20):
        x = simulate(m, SimConfig(2048, seed=77, replication=r))
        g = grid_search(x, NicGrid([ar_model(p) for p in (1, 2, 3)], ["1", "2", "3"]))
        wins += g.winner["label"] == "2"
    assert wins >= 17


def test_wide_sweep_emits_full_table():
    x = simulate(preset("ar2-to-ar1"), SimConfig(400, seed=5))
    cands, labels = [], []
    for p in (2, 3):
        for b in (1, 2):
            cands.append(ar_model(p, ("raw-polynomial", b)))
            labels.append(f"p={p} b={b}")
    g = grid_search(x, NicGrid(cands, labels))
    assert len(g.ranked()) == 4 and {r["label"] for r in g.results} == set(labels)


def test_windowed_acf_white_noise():
    x = simulate(white_noise(), SimConfig(20000, seed=3))
    w = windowed_stats(x, 400, 400, "acf", max_lag=1)
    lag1 = w.values[:, 1]
    assert abs(lag1.mean()) < 3 / np.sqrt(400 * lag1.size)
    assert lag1.std() == pytest.approx(1 / np.sqrt(400), rel=0.25)


def test_windowed_variance_tracks_scale():
    m = white_noise(LIN, beta=[0.0, 1.5])
    x = simulate(m, SimConfig(8192, seed=4))
    w = windowed_stats(x, 1024, 1024, "periodogram")
    var = w.values.sum(axis=1) * 2 * np.pi / 1024  # Parseval with a flat taper
    assert np.all(np.diff(var) > 0)


def test_full_window_reproduces_classical_statistics(rng):
    x = rng.normal(size=300).cumsum() * 0.1 + rng.normal(size=300)
    w = windowed_stats(x, 300, 1, "acf", max_lag=10)
    np.testing.assert_allclose(w.values[0], sm_acf(x, nlags=10, adjusted=False, fft=False),
                               rtol=1e-12)
    p = windowed_stats(x, 300, 1, "pacf", max_lag=10)
    np.testing.assert_allclose(p.values[0], sm_pacf(x, nlags=10, method="ldb")[1:], rtol=1e-10)
    assert w.midpoints.tolist() == [150]


def test_windowed_validation():
    with pytest.raises(ValueError):
        windowed_stats(np.zeros(10), 20, 1)
    with pytest.raises(ValueError):
        windowed_stats(np.zeros(10), 5, 1, kind="spectrum")


@pytest.mark.slow
def test_nic_prefers_lsb_basis_for_lsb_data():
    m = preset("ar2-to-ar1")
    quad = BasisSet("shifted-quadratic", 3)
    cands = [ar_model(2, quad), ar_model(2)]
    wins = 0
    for r in range(20):
        x = simulate(m, SimConfig(2048, seed=31, replication=r))
        wins += grid_search(x, NicGrid(cands, ["b3", "b1"])).winner["label"] == "b3"
    assert wins >= 18


def test_lsbar1_design_describe():
    assert describe(lsbar1_design(1, 1)) == "ar(1) b=2/1"
