import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from mar_kit.cli import main
from mar_kit.io import load_series


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    p = tmp_path_factory.mktemp("cli") / "x.csv"
    code, _, err = run("simulate", "--m", 3, "--n", 2, "--T", 300, "--seed", 4, "--out", p)
    assert code == 0, err
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_shape(data):
    X = load_series(data)
    assert X.values.shape == (300, 3, 2)


def test_simulate_stdout_matches_file(data):
    code, out, _ = run("simulate", "--m", 3, "--n", 2, "--T", 300, "--seed", 4)
    assert code == 0 and out == data.read_text()


@pytest.mark.parametrize("method", ["proj", "lse", "mle", "var1"])
def test_fit_outputs(data, tmp_path, method):
    out = tmp_path / "coef.csv"
    code, text, err = run("fit", data, "--method", method, "--out", out, "--level", "0.9")
    assert code == 0, err
    assert text.startswith("# method=")
    rows = read_csv(out)
    assert len(rows) == (36 if method == "var1" else 13)
    for r in rows:
        lo, hi, est = float(r["lower"]), float(r["upper"]), float(r["estimate"])
        assert lo <= est <= hi
        expected = "+" if lo > 0 else "-" if hi < 0 else "0"
        assert r["mark"] == expected


def test_var1_rank_error(tmp_path):
    p = tmp_path / "short.csv"
    assert run("simulate", "--m", 3, "--n", 2, "--T", 5, "--out", p)[0] == 0
    code, _, err = run("fit", p, "--method", "var1")
    assert code == 1
    assert "mn" in err or "rank" in err


def test_usage_errors(data):
    assert run("fit", data, "--bogus")[0] == 2
    assert run()[0] == 2
    assert run("fit", data, "--level", "2")[0] == 2
    assert run("forecast", data, "--method", "nope", "--start", 200)[0] == 2


def test_data_error_exit(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,row,col,value\n1,a,b,x\n")
    code, _, err = run("fit", p)
    assert code == 1 and "line 2" in err


def test_config_and_override(data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = proj\nlevel = 0.8\n")
    _, text, _ = run("fit", data, "--config", cfg)
    assert "method=PROJ" in text and "level=0.8" in text
    _, text, _ = run("fit", data, "--config", cfg, "--method", "lse")
    assert "method=LSE" in text
    cfg.write_text("nonsense = 1\n")
    assert run("fit", data, "--config", cfg)[0] == 2


def test_manifest(data, tmp_path):
    man = tmp_path / "m.json"
    out = tmp_path / "c.csv"
    assert run("fit", data, "--out", out, "--manifest", man)[0] == 0
    info = json.loads(man.read_text())
    assert info["command"] == "fit"
    assert info["outputs"] == [str(out)]
    assert set(info["versions"]) == {"mar_kit", "numpy", "scipy", "python", "kernel_backend"}
    assert info["result"]["method"] == "LSE"


def test_spec_test_command(data, tmp_path):
    out = tmp_path / "t.csv"
    assert run("test", data, "--out", out)[0] == 0
    vals = {r["stat"]: float(r["value"]) for r in read_csv(out)}
    assert vals["df"] == 24
    assert 0 <= vals["p_value"] <= 1


def test_irf_command(data, tmp_path):
    out, fac = tmp_path / "irf.csv", tmp_path / "fac.csv"
    code, _, err = run("irf", data, "--shock", "2,1", "--horizon", 5, "--out", out, "--factored-out", fac)
    assert code == 0, err
    rows = read_csv(out)
    assert len(rows) == 6 * 6
    resp = np.array([float(r["response"]) for r in rows]).reshape(6, 3, 2)
    acc = np.array([float(r["accumulated"]) for r in rows]).reshape(6, 3, 2)
    np.testing.assert_allclose(acc, np.cumsum(resp, axis=0), atol=1e-12)
    f = read_csv(fac)
    row = np.array([float(r["value"]) for r in f if r["side"] == "row"]).reshape(6, 3)
    col = np.array([float(r["value"]) for r in f if r["side"] == "col"]).reshape(6, 2)
    np.testing.assert_allclose(resp, row[:, :, None] * col[:, None, :], atol=1e-12)
    assert run("irf", data, "--shock", "4,1")[0] == 2


def test_forecast_command(data, tmp_path):
    out = tmp_path / "f.csv"
    code, _, err = run("forecast", data, "--method", "iAR2", "--start", 290, "--out", out)
    assert code == 0, err
    rows = read_csv(out)
    assert [r["t"] for r in rows[:-1]] == [str(t) for t in range(290, 301)]
    total = sum(float(r["sq_error"]) for r in rows[:-1])
    assert float(rows[-1]["sq_error"]) == pytest.approx(total)


def test_experiment_command(tmp_path):
    out = tmp_path / "e.csv"
    code, _, err = run("experiment", "--study", "spec", "--T", 200, "--reps", 5, "--threads", 1, "--out", out)
    assert code == 0, err
    rows = read_csv(out)
    assert {r["stat"] for r in rows} == {"rejection_rate", "mean_statistic"}


def test_preprocess_flag(data, tmp_path):
    code, text, _ = run("fit", data, "--preprocess", "demean,rownormalize")
    assert code == 0
    assert run("fit", data, "--preprocess", "logdiff")[0] == 1


def test_module_entry_point(data):
    res = subprocess.run([sys.executable, "-m", "mar_kit", "test", str(data)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
