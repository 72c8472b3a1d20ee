import csv
import io
import json

import numpy as np
import pytest

from retrialq import cli

ERG = ["--lambda", "1", "--mu", "3", "--mu0", "2"]
NULL = ["--lambda", "2", "--mu", "1", "--mu0", "1"]
CRIT = ["--lambda", "1", "--mu", "2", "--mu0", "1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", *ERG)
    rep = json.loads(out)
    assert code == 0 and rep["regime"] == "ExponentiallyErgodic" and rep["x_star"] == 2.0
    assert rep["mu*mu0"] == 6.0 and rep["lambda*(lambda+mu0)"] == 3.0
    code, out, _ = run(capsys, "classify", *NULL)
    rep = json.loads(out)
    assert rep["regime"] == "NullErgodic" and rep["b_star"] == 0.375
    code, out, _ = run(capsys, "classify", *CRIT)
    rep = json.loads(out)
    assert code == 0 and rep["regime"] == "Critical" and "critical" in rep["note"]


@pytest.mark.parametrize("bad", [["--lambda", "0", "--mu", "1", "--mu0", "1"],
                                 ["--lambda", "1", "--mu", "-2", "--mu0", "1"],
                                 ["--lambda", "x", "--mu", "1", "--mu0", "1"]])
def test_usage_errors(capsys, bad):
    with pytest.raises(SystemExit) as info:
        cli.main(["classify", *bad])
    assert info.value.code == 2


def test_rate(capsys):
    code, out, _ = run(capsys, "rate", *ERG)
    rec = json.loads(out)
    assert code == 0 and rec["regime"] == "ExponentiallyErgodic" and rec["rate"] >= 0.05
    lo, hi = rec["intervals"]["b_given_x"]
    assert lo < rec["b"] < hi
    code, out, _ = run(capsys, "rate", *NULL)
    rec = json.loads(out)
    assert rec["rate"] >= 0.25
    code, out, err = run(capsys, "rate", *CRIT)
    assert code == 3 and "critical" in err


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_ergodic_demo(capsys):
    code, out, _ = run(capsys, "verify", *ERG, "--t-max", "50", "--t-step", "1")
    rows = _csv(out)
    assert code == 0 and len(rows) == 51
    assert min(float(r["slack"]) for r in rows) >= 0
    assert float(rows[0]["observed"]) == 1.0


def test_verify_null_demo(capsys):
    code, out, _ = run(capsys, "verify", *NULL, "--k", "21", "--N", "10", "--t-max", "40")
    rows = _csv(out)
    assert code == 0 and len(rows) == 41
    assert min(float(r["slack"]) for r in rows) >= 0


def test_verify_t0_row_is_analytic(capsys):
    from retrialq import SystemParams, null_bound, optimize_rate
    code, out, _ = run(capsys, "verify", *NULL, "--k", "21", "--N", "10", "--t-max", "2")
    row = _csv(out)[0]
    p = SystemParams(2, 1, 1)
    cert = optimize_rate(p)
    assert float(row["bound"]) == float(f"{null_bound(p, cert, 21, 10, 0.0):.15g}")


def test_verify_reports_violation(capsys, monkeypatch):
    from retrialq.ergodicity import ErgBound
    monkeypatch.setattr(cli, "erg_bound", lambda *a, **k: ErgBound(np.zeros(3), 0.0, 0.0))
    code, out, err = run(capsys, "verify", *ERG, "--t-max", "2")
    assert code == 5 and "violated" in err


def test_numeric_failure_exit(capsys):
    code, _, err = run(capsys, "transient", *NULL, "--truncation", "40", "--initial", "19", "--t-max", "40")
    assert code == 4 and "truncation" in err


def test_stationary_and_manifest(capsys, tmp_path):
    out = tmp_path / "pi.csv"
    code, _, _ = run(capsys, "stationary", *ERG, "--out", str(out))
    assert code == 0
    rows = list(csv.reader(open(out)))
    probs = np.array([float(v) for v in rows[1][2:]])
    assert abs(probs.sum() - 1) <= 1e-12
    manifest = json.load(open(f"{out}.manifest.json"))
    assert manifest["command"] == "stationary"
    assert manifest["truncation"] == 400
    assert {"parameters", "version", "timestamp", "seed", "argv"} <= set(manifest)
    code, _, _ = run(capsys, "stationary", *NULL)
    assert code == 3


def test_transient_echoes_initial(capsys):
    code, out, _ = run(capsys, "transient", *ERG, "--initial", "3", "--t-max", "1", "--t-step", "0.5")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["t", "leak", "p1"]
    first = [float(v) for v in rows[1][2:]]
    assert first[2] == 1.0 and sum(first) == 1.0
    assert len(rows) == 4


def test_simulate_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", *ERG, "--paths", "300", "--seed", "17", "--t-max", "2", "--t-step", "1"]
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_text() == b.read_text()
    assert a.read_text().splitlines()[0] == "t,server,orbit,count,probability,stderr"
    ma = json.load(open(f"{a}.manifest.json"))
    assert ma["seed"] == 17


def test_json_formats(capsys):
    code, out, _ = run(capsys, "verify", *ERG, "--t-max", "1", "--format", "json")
    assert json.loads(out)[0]["t"] == 0.0
    code, out, _ = run(capsys, "simulate", *ERG, "--paths", "10", "--format", "json")
    assert sum(int(r["count"]) for r in json.loads(out)) == 10
