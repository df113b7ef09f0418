import csv
import io
import json
import subprocess
import sys

import pytest

import robust_ratio.cli as cli
from robust_ratio.errors import NumericalFailure


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_fit_robust_median(capsys):
    code, out, _ = run(["fit", "--data", "table2", "--model", "lptn", "--theta", "0.5",
                        "--prior", "inv-sigma"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["median"]["beta"] == pytest.approx(0.319, abs=1e-3)
    assert doc["model"] == "lptn" and doc["prior"] == "inv-sigma"
    assert "ratio" not in doc


def test_fit_normal_sigma_hpd(capsys):
    code, out, _ = run(["fit", "--data", "table2", "--model", "normal", "--theta", "0.5",
                        "--prior", "inv-sigma"], capsys)
    assert code == 0
    lo, hi = json.loads(out)["hpd95"]["sigma"]
    assert (lo, hi) == pytest.approx((1.559, 3.006), abs=3e-3)


def test_fit_population_mean_block(capsys):
    code, out, _ = run(["fit", "--data", "table2", "--mu-x", "210"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["population_mean"]["point"] == pytest.approx(66.99, abs=0.25)
    assert doc["ratio"]["point"] == doc["median"]["beta"]


def test_fit_empty_csv(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("")
    code, _, err = run(["fit", "--data", str(p)], capsys)
    assert code == 2
    assert "error" in err


def test_fit_csv_errors_report_lines(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n1,2\n0,3\n")
    code, _, err = run(["fit", "--data", str(p)], capsys)
    assert code == 2 and "3" in err
    p.write_text("x,y\n1,2\n2,abc\n")
    code, _, err = run(["fit", "--data", str(p)], capsys)
    assert code == 2 and "3" in err


def test_unknown_model_rejected(capsys):
    code, _, err = run(["fit", "--data", "table2", "--model", "cauchy"], capsys)
    assert code == 2 and "cauchy" in err


def test_sweep_single_step(capsys):
    code, out, _ = run(["sweep", "--data", "table1", "--steps", "1", "--models", "lptn"], capsys)
    assert code == 0
    r = rows(out)
    assert r[0] == ["y_value", "model", "beta_hat", "sigma_hat"]
    assert len(r) == 2 and float(r[1][0]) == 85.0


def test_sweep_small_grid(capsys):
    code, out, _ = run(["sweep", "--data", "table1", "--from", "120", "--to", "136", "--steps", "3",
                        "--models", "normal,lptn"], capsys)
    assert code == 0
    r = rows(out)[1:]
    assert len(r) == 6
    robust = {float(v): (float(b), float(s)) for v, m, b, s in r if m == "lptn"}
    assert robust[128.0] == pytest.approx((28.6, 12.4), abs=0.05)


@pytest.mark.parametrize("index", ["0", "21"])
def test_sweep_bad_index(index, capsys):
    code, _, err = run(["sweep", "--data", "table1", "--index", index, "--steps", "1"], capsys)
    assert code == 2


def test_converge_traces(capsys):
    code, out, _ = run(["converge", "--data", "table1", "--outliers", "11:+",
                        "--omegas", "1e2,1e3,1e4"], capsys)
    assert code == 0
    r = rows(out)
    assert r[0] == ["omega", "l1", "log_marginal_ratio"]
    l1 = [float(x[1]) for x in r[1:]]
    assert l1[2] < l1[1]
    code, out, _ = run(["converge", "--data", "table1", "--outliers", "11:+",
                        "--omegas", "1e2,1e4", "--model", "normal"], capsys)
    l1 = [float(x[1]) for x in rows(out)[1:]]
    assert l1[1] > l1[0]
    code, out, _ = run(["converge", "--data", "table1", "--outliers", "",
                        "--omegas", "1e2,1e4"], capsys)
    assert code == 0
    assert all(float(x[1]) == 0 for x in rows(out)[1:])


def test_converge_bad_outlier_spec(capsys):
    code, _, _ = run(["converge", "--data", "table1", "--outliers", "11:?"], capsys)
    assert code == 2


def test_data_table2(capsys):
    code, out, _ = run(["data", "--name", "table2"], capsys)
    r = rows(out)
    assert code == 0 and r[0] == ["x", "y"] and len(r) == 21
    assert r[17] == ["250.2", "6.1"]


def test_data_table1(capsys):
    code, out, _ = run(["data", "--name", "table1", "--y11", "85"], capsys)
    r = rows(out)
    assert len(r) == 21 and r[1] == ["1.0", "20.8"]
    _, default, _ = run(["data", "--name", "table1"], capsys)
    assert rows(default)[11][1] == "85.0"
    assert default == out


def test_data_unknown_name(capsys):
    code, _, _ = run(["data", "--name", "table9"], capsys)
    assert code == 2


@pytest.mark.parametrize("name", ["table1", "table2"])
def test_round_trip_bitwise(name, tmp_path, capsys):
    path = tmp_path / f"{name}.csv"
    assert cli.main(["data", "--name", name, "--output", str(path)]) == 0
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert cli.main(["fit", "--data", name, "--output", str(a)]) == 0
    assert cli.main(["fit", "--data", str(path), "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_small(capsys):
    code, out, _ = run(["simulate", "--reps", "5", "--seed", "4", "--models", "normal"], capsys)
    assert code == 0
    r = rows(out)
    assert r[0] == ["scenario", "model", "parameter", "mse", "mc_se", "failures", "reps"]
    assert len(r) == 1 + 3 * 2
    assert {x[0] for x in r[1:]} == {"N(0,1)", "0.9N(0,1)+0.1N(0,10^2)", "0.95N(0,1)+0.05N(10,1)"}


def test_simulate_unknown_scenarios(capsys):
    code, _, _ = run(["simulate", "--reps", "2", "--scenarios", "other"], capsys)
    assert code == 2


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericalFailure("forced", estimate=1.0)
    monkeypatch.setattr(cli, "fit_model", boom)
    code, _, err = run(["fit", "--data", "table2"], capsys)
    assert code == 3 and "numerical failure" in err


def test_console_entry_point():
    done = subprocess.run([sys.executable, "-m", "robust_ratio", "data", "--name", "table2"],
                          capture_output=True, text=True, check=False)
    assert done.returncode == 0
    assert done.stdout.startswith("x,y\n")
    bad = subprocess.run([sys.executable, "-m", "robust_ratio", "fit"], capture_output=True,
                         text=True, check=False)
    assert bad.returncode == 2
