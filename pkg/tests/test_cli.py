import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fpcap import attacks
from fpcap.cli import fmt, main, read_document


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_k2_json(capsys):
    code, out, _ = run(capsys, "solve", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["capacity_bits"] == 0.25
    assert doc["channel"] == [0, 0.5, 1]
    assert doc["support"] == [{"w": 0.5, "weight": 1}]
    assert doc["timestamp"] is None and doc["schema_version"] == "1"
    assert doc["options"]["seed"] == 0


def test_solve_k1_and_k5(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "1")
    assert code == 0 and json.loads(out)["capacity_bits"] == 1.0
    path = tmp_path / "s5.json"
    assert run(capsys, "solve", "5", "--tol", "1e-8", "--out", str(path))[0] == 0
    cap = json.loads(path.read_text())["capacity_bits"]
    assert attacks.lower_bound(5) <= cap <= attacks.upper_bound(5)
    assert 0.01169 < cap < 0.05771


def test_solve_csv(capsys):
    code, out, _ = run(capsys, "solve", "3", "--format", "csv")
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["quantity", "index", "value"]
    vals = {r[0]: r[2] for r in rows if r[1] == ""}
    assert float(vals["capacity_bits"]) == pytest.approx(0.0975441658345, abs=1e-12)
    assert sum(1 for r in rows if r[0] == "channel") == 4


def test_seventeen_digits_round_trip(capsys, tmp_path):
    assert fmt(0.1) == "0.10000000000000001"
    path = tmp_path / "s4.json"
    run(capsys, "solve", "4", "--out", str(path))
    text = path.read_text()
    sol, opts = read_document(text)
    doc = json.loads(text)
    assert sol.capacity == doc["capacity_bits"]
    for x in doc["channel"] + [doc["maxmin"], doc["minmax"]]:
        assert float(fmt(x)) == x


def test_solve_usage_errors(capsys):
    for argv in (["solve", "0"], ["solve", "x"], ["solve", "3", "--format", "xml"],
                 ["solve", "3", "--tol", "0.5"], ["nope"], []):
        with pytest.raises(SystemExit) as info:
            code = main(argv)
            raise SystemExit(code)
        assert info.value.code == 1
    capsys.readouterr()


def test_solve_slow_k_gated(capsys):
    code, _, err = run(capsys, "solve", "37")
    assert code == 1 and "--allow-slow" in err


def test_solve_non_convergence_exit_2(capsys, tmp_path):
    path = tmp_path / "s8.json"
    code, _, err = run(capsys, "solve", "8", "--no-newton", "--max-iter", "2", "--out", str(path))
    assert code == 2 and "warning" in err
    doc = json.loads(path.read_text())
    assert doc["converged"] is False and doc["gap"] > 1e-8
    assert doc["maxmin"] <= doc["minmax"]


def test_determinism(capsys):
    outs = [run(capsys, "solve", "4", "--seed", "7")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_timestamp_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    doc = json.loads(run(capsys, "solve", "2")[1])
    assert doc["timestamp"] == "1970-01-01T00:00:00Z"


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--k-range", "2:10")
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert [int(r["k"]) for r in rows] == list(range(2, 11))
    last = rows[-1]
    assert float(last["upper"]) == pytest.approx(0.0144269504, abs=1e-10)
    assert float(last["lower"]) == pytest.approx(0.0029235114, abs=1e-10)
    ups = [float(r["upper"]) for r in rows]
    los = [float(r["lower"]) for r in rows]
    assert all(a > b for a, b in zip(ups, ups[1:])) and all(a > b for a, b in zip(los, los[1:]))
    assert all(float(r["interleaving_value"]) <= float(r["upper"]) for r in rows)


def test_bounds_json_and_jobs(capsys):
    code, out, _ = run(capsys, "bounds", "--k-range", "3:6", "--format", "json", "--jobs", "2")
    assert code == 0
    assert [r["k"] for r in json.loads(out)] == [3, 4, 5, 6]
    assert run(capsys, "bounds")[0] == 1
    assert run(capsys, "bounds", "3", "--k-range", "2:4")[0] == 1


def test_figures(capsys, tmp_path):
    code, _, _ = run(capsys, "figures", "--out", str(tmp_path), "--jobs", "2")
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["fig1.csv", "fig2_k10.csv", "fig2_k5.csv", "fig3_k10.csv", "fig3_k5.csv"]
    fig1 = list(csv.DictReader((tmp_path / "fig1.csv").open()))
    assert list(fig1[0]) == ["k", "capacity", "lower", "upper", "conjectured"]
    row2 = fig1[0]
    assert row2["k"] == "2" and float(row2["capacity"]) == 0.25
    assert float(row2["lower"]) == pytest.approx(0.0730878, abs=1e-7)
    assert float(row2["upper"]) == pytest.approx(0.3606738, abs=1e-7)
    for k in (5, 10):
        d = np.array([float(r["p_minus_interleaving"])
                      for r in csv.DictReader((tmp_path / f"fig2_k{k}.csv").open())])
        assert len(d) == k + 1 and abs(d.sum()) < 1e-12
        np.testing.assert_allclose(d, -d[::-1], atol=1e-12)
        rows = list(csv.DictReader((tmp_path / f"fig3_k{k}.csv").open()))
        assert len(rows) == 1001
        mid = rows[500]
        assert float(mid["w"]) == 0.5 and float(mid["cdf_arcsine"]) == pytest.approx(0.5, abs=1e-15)
        emp = [float(r["cdf_optimal"]) for r in rows]
        assert emp[0] == 0.0 and emp[-1] == pytest.approx(1.0) and np.all(np.diff(emp) >= 0)


def test_figures_slow_k_partial(capsys, tmp_path):
    code, _, err = run(capsys, "figures", "--which", "2", "--k-list", "3,37", "--out", str(tmp_path))
    assert code == 2 and "allow-slow" in err
    assert sorted(p.name for p in tmp_path.iterdir()) == ["fig2_k3.csv"]


def test_verify_round_trip(capsys, tmp_path):
    path = tmp_path / "s3.json"
    run(capsys, "solve", "3", "--out", str(path))
    code, out, _ = run(capsys, "verify", "--in", str(path))
    assert code == 0 and "certificate PASSED" in out


def test_verify_tampered_and_malformed(capsys, tmp_path):
    path = tmp_path / "s3.json"
    run(capsys, "solve", "3", "--out", str(path))
    doc = json.loads(path.read_text())
    doc["channel"][1] += 0.01
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--in", str(bad))
    assert code == 2 and "FAIL best_response_w" in out
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert run(capsys, "verify", "--in", str(junk))[0] == 1
    assert run(capsys, "verify", "--in", str(tmp_path / "missing.json"))[0] == 1
    junk.write_text('{"k": 3}')
    assert run(capsys, "verify", str(junk))[0] == 1


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fpcap.cli", "solve", "2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["capacity_bits"] == 0.25
