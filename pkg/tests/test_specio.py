import json
import logging

import numpy as np
import pytest

from lsbts.models import preset
from lsbts.specio import (DataError, load_model, model_from_dict, read_series, save_model,
                          write_series)


def test_header_and_rows(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("x\n" + "\n".join(str(i * 0.5) for i in range(100)) + "\n")
    x, meta = read_series(str(p))
    assert x.size == 100 and x[3] == 1.5 and meta["column"] == "x"


def test_headerless(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1.0\n2.5\n-3\n")
    x, meta = read_series(str(p))
    assert x.tolist() == [1.0, 2.5, -3.0] and meta["ignored"] == []


def test_blank_line_names_the_line(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("x\n1\n2\n\n3\n")
    with pytest.raises(DataError, match="line 4"):
        read_series(str(p))


def test_time_column_ignored_with_warning(tmp_path, caplog):
    p = tmp_path / "x.csv"
    p.write_text("t,x\n1,0.5\n2,0.7\n")
    with caplog.at_level(logging.WARNING):
        x, meta = read_series(str(p))
    assert x.tolist() == [0.5, 0.7] and meta["ignored"] == ["t"]
    assert "'t'" in caplog.text


def test_errors(tmp_path):
    cases = {"empty.csv": "", "nan.csv": "x\n1\nnan\n", "missing.csv": "x\n1\n\"\"\n2\n",
             "wide.csv": "a,b,c\n1,2,3\n", "text.csv": "x\n1\nabc\n",
             "ragged.csv": "t,x\n1,2\n3\n"}
    for name, text in cases.items():
        p = tmp_path / name
        p.write_text(text)
        with pytest.raises(DataError):
            read_series(str(p))
    with pytest.raises(DataError, match="line 3, column 1"):
        read_series(str(tmp_path / "text.csv"))
    with pytest.raises(DataError):
        read_series(str(tmp_path / "nope.csv"))


def test_series_round_trip(tmp_path, rng):
    x = rng.normal(size=50)
    write_series(x, str(tmp_path / "s.csv"))
    y, _ = read_series(str(tmp_path / "s.csv"))
    assert y.tobytes() == x.tobytes()


def test_model_round_trip(tmp_path):
    m = preset("ar2-to-ar1")
    save_model(m, str(tmp_path / "m.json"))
    m2 = load_model(str(tmp_path / "m.json"))
    assert m2 == m and np.array_equal(m2.beta, m.beta)


def test_preset_and_coefficients():
    m = model_from_dict({"preset": "fd-rising", "coefficients": [0.0, 1.0, 0.2]})
    assert m.beta.tolist() == [0.0, 1.0, 0.2]
    assert model_from_dict({"preset": "paper-ar2"}) == preset("ar2-to-ar1")
    with pytest.raises(DataError):
        model_from_dict({"preset": "nope"})


def test_explicit_model():
    d = {"family": "ar", "p": 1, "curves": [
        {"role": "pacf", "basis": {"kind": "raw-polynomial", "size": 2}, "coefficients": [1, 1]},
        {"role": "scale"}]}
    m = model_from_dict(d)
    assert m.n_coef == 3 and m.curves[0].link.kind.value == "shifted-logit-pacf"


@pytest.mark.parametrize("bad", [
    {"family": "ar", "curves": [{"role": "scale"}], "extra": 1},
    {"family": "ar", "curves": [{"role": "pacf", "colour": 1}, {"role": "scale"}]},
    {"family": "ar", "curves": [{"role": "pacf", "basis": {"kind": "constant", "sz": 1}},
                                {"role": "scale"}]},
    {"family": "ar", "p": 2, "curves": [{"role": "pacf"}, {"role": "scale"}]},
    {"family": "ar", "curves": [{"role": "scale"}, {"role": "scale"}]},
    {"family": "garch", "curves": [{"role": "scale"}]},
    {"family": "ar", "curves": []},
    {"preset": "ar2-to-ar1", "name": "x"},
])
def test_strict_parsing(bad):
    with pytest.raises(DataError):
        model_from_dict(bad)


def test_load_fit_result_file(tmp_path):
    m = preset("fd-rising")
    (tmp_path / "fit.json").write_text(json.dumps({"model": m.to_dict(), "nll": 1.0}))
    assert load_model(str(tmp_path / "fit.json")) == m
