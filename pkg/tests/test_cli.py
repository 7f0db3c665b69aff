import csv
import json
import os
import subprocess
import sys

import pytest

from shadowbp.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def csv_bytes(d):
    return {n: open(os.path.join(d, n), "rb").read() for n in sorted(os.listdir(d)) if n.endswith(".csv")}


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "a"
    assert main(["run", "--scenario", "linear40", "--set", "N=4", "--slots", "400", "--out", str(out)]) == 0
    names = set(os.listdir(out))
    assert {"series.csv", "summary.csv", "totals.csv", "allocation.csv", "hop_profile.csv",
            "chain_profile.csv", "manifest.json"} <= names
    series = read_csv(out / "series.csv")
    assert series[0] == ["slot", "shadow_total", "real_total"] and len(series) == 401
    assert read_csv(out / "allocation.csv")[0] == ["link", "tail", "head", "key", "rate"]
    totals = dict(read_csv(out / "totals.csv")[1:])
    assert totals["conservation_ok"] == "True" and totals["fifo_violations"] == "0"
    man = json.load(open(out / "manifest.json"))
    assert man["scenario"]["run"]["slots"] == 400 and len(man["scenario"]["flows"]) == 5


def test_csv_byte_stable(tmp_path):
    args = ["run", "--scenario", "diamond8", "--slots", "300"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = csv_bytes(tmp_path / "a"), csv_bytes(tmp_path / "b")
    assert a == b and "allocation_edges.csv" in a


def test_run_replications(tmp_path):
    assert main(["run", "--scenario", "diamond8", "--slots", "100", "--seeds", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "replications.csv")
    assert [r[1] for r in rows[1:]] == ["1", "2"]
    assert os.path.isdir(tmp_path / "rep1")


def test_grid_manifest_records_flows(tmp_path):
    assert main(["run", "--scenario", "grid16", "--slots", "20", "--out", str(tmp_path)]) == 0
    man = json.load(open(tmp_path / "manifest.json"))
    assert len(man["scenario"]["flows"]) == 48 and man["topology"]["kind"] == "grid"


def test_sweep(tmp_path):
    code = main(["sweep", "--scenario", "diamond8", "--param", "M", "--values", "0,10",
                 "--seeds", "2", "--slots", "200", "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0][:3] == ["param", "value", "seed"]
    assert [r[2] for r in rows[1:]] == ["1", "2", "mean", "1", "2", "mean"]
    m = json.load(open(tmp_path / "manifest.json"))
    assert m["sweep"]["values"] == ["0", "10"] and m["scenario"][1]["params"]["M"] == 10


def test_sweep_space_separated(tmp_path):
    assert main(["sweep", "--scenario", "linear40", "--set", "N=3", "--param", "beta",
                 "--values", "0.5", "1", "--slots", "100", "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("args", [
    ["sweep", "--scenario", "diamond8", "--param", "gamma", "--values", "1"],
    ["sweep", "--scenario", "diamond8", "--param", "M", "--values", ""],
    ["sweep", "--scenario", "diamond8", "--param", "M"],
    ["run", "--scenario", "diamond8", "--set", "colour=red"],
    ["run", "--scenario", "diamond8", "--set", "slots"],
])
def test_input_errors_exit_2(tmp_path, args, capsys):
    assert main(args + ["--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_file_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("name: x\nnetwork: {nodes: 2, links: [[0, 1, 10]]}\nflows: []\nrun: {slots: ten}\n")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "line 4" in capsys.readouterr().err
    p.write_text("name: [unclosed\n")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("args", [
    ["run", "--scenario", "diamond8", "--set", "beta=2"],
    ["run", "--scenario", "grid16", "--set", "N=3"],
    ["run", "--scenario", "no/such/file.yaml"],
])
def test_invariant_errors_exit_3(tmp_path, args):
    assert main(args + ["--out", str(tmp_path)]) == 3


def test_invalid_network_exit_3(tmp_path):
    p = tmp_path / "cap.yaml"
    p.write_text("network: {nodes: 2, links: [[0, 1, 99]]}\n"
                 "flows: [{id: 0, source: 0, destination: 1, traffic: {kind: inelastic, lambda: 1}}]\n")
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 3


def test_verify(tmp_path, capsys):
    assert main(["verify", "equivalence", "--slots", "100", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert read_csv(tmp_path / "verify_equivalence.csv")[0] == ["check", "passed", "measured", "target"]
    assert main(["verify", "everything"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "shadowbp", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify" in res.stdout
