import csv
import io
import json
import subprocess
import sys

import pytest

from switched_server import cli
from switched_server.reproduce import TableCheck


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_constants(capsys):
    code, out, _ = _run(capsys, "constants", "--digits", "6")
    data = json.loads(out)
    assert code == 0
    assert data["eta"] == "10.331851"
    assert data["lambda3"] == "0.451606"
    assert data["expected"]["lambda_norm"] == "1.311107"


def test_constants_high_precision(capsys):
    _, out, _ = _run(capsys, "constants", "--digits", "60")
    assert json.loads(out)["eta"].startswith("10.33185141266662366231621162575425521")


def test_verify_passes(capsys):
    code, out, _ = _run(capsys, "verify")
    rep = json.loads(out)
    assert code == 0 and rep["status"] == "pass"
    assert all(l["status"] == "pass" for l in rep["links"])
    tables = [l for l in rep["links"] if l["link"].startswith("table:")]
    assert len(tables) == 6
    assert all("expected" in row for t in tables for row in t["witnesses"]["rows"])


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.run(["verify", "--seed", "9", "--out", str(a)]) == 0
    assert cli.run(["verify", "--seed", "9", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["seed"] == 9


def test_verify_fails_on_broken_link(capsys, caplog, monkeypatch):
    def broken():
        chk = TableCheck("broken")
        chk.add("x", "1", "2", False)
        return [chk]

    monkeypatch.setattr(cli, "all_tables", broken)
    code, out, _ = _run(capsys, "verify")
    assert code == 1
    assert json.loads(out)["status"] == "fail"
    assert "table: broken" in caplog.text


def test_params(capsys):
    code, out, _ = _run(capsys, "params", "--digits", "6")
    data = json.loads(out)
    assert code == 0
    assert (data["d1"], data["d2"], data["d3"]) == ("0.213841", "4.036935", "1.428826")
    assert data["tail_bound_exp"] == -64
    assert all(data["invariants"].values())


def test_params_csv(capsys):
    _, out, _ = _run(capsys, "params", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["name", "value", "tail_bound_exp"]
    assert rows[1] == ["d1", "0.213841", "-64"]


def test_simulate_exotic(capsys):
    code, out, err = _run(capsys, "simulate", "--d", "exotic", "--n", "100000")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "k,t,v1,v2,v3,server"
    assert len(lines) == 100001
    summary = json.loads(err)
    assert summary["n"] == 100000
    freq = [float(summary[f"freq{i}"]) for i in (1, 2, 3)]
    assert all(abs(a - b) <= 0.005 for a, b in zip(freq, (0.3444, 0.4182, 0.2372)))


def test_simulate_json_and_samples(capsys, tmp_path):
    code, out, _ = _run(capsys, "simulate", "--d", "unit", "--v0", "0,2/3,1/3", "--n", "6",
                        "--format", "json")
    assert code == 0 and json.loads(out)["freq1"] == "0.333333"
    path = tmp_path / "traj.csv"
    code, out, err = _run(capsys, "simulate", "--d", "1,1,1", "--v0", "0.2,0.5,0.3", "--n", "3",
                          "--sample-step", "1/4", "--out", str(path))
    assert code == 0
    assert path.read_text().splitlines()[0] == "t,v1,v2,v3"
    assert json.loads(out)["d"] == "custom"


def test_attractor(capsys):
    _, out, _ = _run(capsys, "attractor", "--n", "12", "--format", "json")
    data = json.loads(out)
    assert data["nested"] and len(data["levels"]) == 13
    assert all(l["length_times_2^n"] == "1.000000" for l in data["levels"])
    _, out, _ = _run(capsys, "attractor", "--n", "2")
    assert out.splitlines()[0] == "depth,index,lo,hi"


def test_coding(capsys):
    _, out, _ = _run(capsys, "coding", "--d", "unit", "--z", "1/9", "--n", "9")
    data = json.loads(out)
    assert data["word"] == "123123123"
    assert data["periodicity"]["period"] == 3
    _, out, _ = _run(capsys, "coding", "--n", "300")
    data = json.loads(out)
    assert data["d"] == "exotic(K=300)" and data["periodicity"]["kind"] == "none"
    _, out, _ = _run(capsys, "coding", "--d", "unit", "--n", "5", "--format", "csv")
    assert out.splitlines() == ["start,length,word", "0,5,13243"]


def test_conjugacy(capsys):
    code, out, _ = _run(capsys, "conjugacy", "--d", "exotic", "--n", "200", "--seed", "4")
    data = json.loads(out)
    assert code == 0 and data["exact_zero"] and data["seed"] == 4


@pytest.mark.parametrize("argv", [
    ["params", "--digits", "201"],
    ["params", "--digits", "0"],
    ["simulate", "--n", "0"],
    ["simulate", "--v0", "0.5,0.5,0.5"],
    ["simulate", "--v0", "1,2"],
    ["conjugacy", "--d", "1,0,1"],
    ["params", "--K", "2"],
])
def test_bad_arguments(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        cli.run(["params", "--bogus"])
    assert exc.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "switched_server", "constants"],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["eta"] == "10.331851"
