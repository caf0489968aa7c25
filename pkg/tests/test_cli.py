import json
import subprocess
import sys

import numpy as np
import pytest

from lsbts.cli import main
from lsbts.likelihood import ExactLikConfig, WhittleConfig, exact_nll, whittle_nll
from lsbts.models import lsbar1_design, preset
from lsbts.specio import load_model, read_series, save_model


@pytest.fixture
def ar2_files(tmp_path):
    m = preset("ar2-to-ar1")
    save_model(m, str(tmp_path / "ar2.json"))
    tmpl = m.with_beta(np.zeros(m.n_coef))
    save_model(tmpl, str(tmp_path / "ar2-template.json"))
    return tmp_path


def test_simulate_then_fit_round_trip(ar2_files, capsys):
    d = ar2_files
    assert main(["simulate", "--model", str(d / "ar2.json"), "--T", "1024", "--seed", "7",
                 "--out", str(d / "x.csv")]) == 0
    assert main(["fit", "--model-template", str(d / "ar2-template.json"), "--data",
                 str(d / "x.csv"), "--out", str(d / "fit.json")]) == 0
    rep = json.loads((d / "fit.json").read_text())
    truth = preset("ar2-to-ar1").beta
    assert rep["converged"]
    assert np.all(np.abs(np.array(rep["beta"]) - truth) <= 3 * np.array(rep["ses"]))
    assert len(rep["bands"]) == 3
    out = capsys.readouterr().out
    assert '"nll"' in out


@pytest.mark.parametrize("likelihood", ["exact", "whittle"])
def test_fit_output_reproduces_nll(ar2_files, likelihood):
    d = ar2_files
    main(["simulate", "--preset", "ar2-to-ar1", "--T", "512", "--seed", "3", "--out",
          str(d / "x.csv")])
    assert main(["fit", "--preset", "ar2-to-ar1", "--data", str(d / "x.csv"), "--likelihood",
                 likelihood, "--out", str(d / "fit.json")]) == 0
    rep = json.loads((d / "fit.json").read_text())
    m = load_model(str(d / "fit.json"))
    x, _ = read_series(str(d / "x.csv"))
    if likelihood == "exact":
        val = exact_nll(m, x, ExactLikConfig(**rep["likelihood_config"]))
    else:
        val = whittle_nll(m, x, WhittleConfig(**rep["likelihood_config"]))
    assert val == pytest.approx(rep["nll"], rel=1e-12, abs=1e-12)


def test_non_numeric_cell_is_data_error(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("x\n1.0\n2.0\noops\n")
    assert main(["fit", "--preset", "ar1-linear", "--data", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 4" in err and "column 1" in err


def test_usage_errors(tmp_path):
    assert main(["fit", "--bogus"]) == 1
    assert main([]) == 1
    assert main(["simulate", "--T", "10"]) == 1  # neither --model nor --preset


def test_unknown_json_key_aborts(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"preset": "ar1-linear", "colour": "red"}))
    assert main(["simulate", "--model", str(p), "--T", "10"]) == 2


def test_numerical_failure_code(tmp_path):
    main(["simulate", "--preset", "ar2-to-ar1", "--T", "300", "--out", str(tmp_path / "x.csv")])
    rc = main(["fit", "--preset", "ar2-to-ar1", "--data", str(tmp_path / "x.csv"),
               "--max-iter", "1", "--restarts", "0"])
    assert rc == 3


def test_simulate_is_bit_reproducible(tmp_path):
    for name in ("a.csv", "b.csv"):
        main(["simulate", "--preset", "fd-rising", "--T", "200", "--seed", "11", "--out",
              str(tmp_path / name)])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_test_verb(tmp_path, capsys):
    m = lsbar1_design(1.0, 0.0)
    save_model(m, str(tmp_path / "ar1-linear.json"))
    pvals = []
    for seed in range(5):
        main(["simulate", "--model", str(tmp_path / "ar1-linear.json"), "--T", "500", "--seed",
              str(seed), "--out", str(tmp_path / "x.csv")])
        capsys.readouterr()
        assert main(["test", "--data", str(tmp_path / "x.csv"), "--model-template",
                     str(tmp_path / "ar1-linear.json")]) == 0
        pvals.append(json.loads(capsys.readouterr().out)["p_value"])
    assert all(0 <= p <= 1 for p in pvals) and len(set(pvals)) == 5


def test_select_explore_spectrum_forecast(tmp_path, capsys):
    main(["simulate", "--preset", "ar2-to-ar1", "--T", "600", "--out", str(tmp_path / "x.csv")])
    grid = {"candidates": [{"preset": "ar2-to-ar1"},
                           {"family": "ar", "p": 1, "curves": [{"role": "pacf"},
                                                               {"role": "scale"}]}],
            "labels": ["lsb", "ar1"]}
    (tmp_path / "grid.json").write_text(json.dumps(grid))
    capsys.readouterr()
    assert main(["select", "--data", str(tmp_path / "x.csv"), "--grid", str(tmp_path / "grid.json"),
                 "--out", str(tmp_path / "nic.csv")]) == 0
    assert json.loads(capsys.readouterr().out)["winner"] == "lsb"
    assert (tmp_path / "nic.csv").read_text().startswith("rank,label")
    assert main(["explore", "--data", str(tmp_path / "x.csv"), "--window", "128", "--kind", "acf",
                 "--out", str(tmp_path / "acf.csv")]) == 0
    assert main(["spectrum", "--preset", "fd-rising", "--n-u", "3", "--n-lambda", "4",
                 "--out", str(tmp_path / "f.csv")]) == 0
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 1 + 12
    assert main(["forecast", "--preset", "ar2-to-ar1", "--data", str(tmp_path / "x.csv"),
                 "--h", "3", "--out", str(tmp_path / "fc.csv")]) == 0
    assert (tmp_path / "fc.csv").read_text().splitlines()[0] == "step,forecast,sd,lower,upper"


def test_mc_verb(tmp_path, capsys):
    exp = {"kind": "accuracy", "generator": {"preset": "ar1-linear"}, "T": [256], "R": 3,
           "B": 20, "estimators": ["exact", "whittle"]}
    (tmp_path / "e.json").write_text(json.dumps(exp))
    assert main(["mc", "--experiment", str(tmp_path / "e.json"), "--out-dir",
                 str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "summary.json").exists()
    sp = {"kind": "size-power", "T": [200], "R": 3, "beta11": [0.0, 1.0]}
    (tmp_path / "sp.json").write_text(json.dumps(sp))
    assert main(["mc", "--experiment", str(tmp_path / "sp.json"), "--out-dir",
                 str(tmp_path / "out")]) == 0
    assert len((tmp_path / "out" / "size_power.csv").read_text().splitlines()) == 3
    (tmp_path / "bad.json").write_text(json.dumps({"kind": "accuracy", "Rr": 3}))
    assert main(["mc", "--experiment", str(tmp_path / "bad.json")]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lsbts", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
