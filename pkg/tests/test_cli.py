from __future__ import annotations

import json
import subprocess
import sys

import pytest

from uepmm.cli import main
from uepmm.harness import parse_csv

FAST = ["--set", "partition.U=6", "--set", "partition.H=8", "--set", "partition.Q=6"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_decode_prob_defaults(capsys):
    code, out, _ = run(capsys, "analyze", "decode-prob", "--max-n", "4")
    assert code == 0
    rows = {(r[0], r[3]): r[4] for r in parse_csv(out)}
    assert rows[(3.0, "decode_prob_class_1")] == pytest.approx(0.064, abs=1e-12)
    assert rows[(4.0, "decode_prob_class_1")] == pytest.approx(0.1792, abs=1e-12)
    assert rows[(3.0, "decode_prob_class_2")] == pytest.approx(0.042875, abs=1e-12)


def test_analyze_loss_preset_and_json(capsys):
    code, out, _ = run(capsys, "analyze", "loss", "--config", "preset:now-rxc", "--t-grid", "0.45,1.05",
                       "--format", "json")
    assert code == 0
    rows = [r for r in json.loads(out)["rows"] if r["metric"] == "normalized_loss"]
    assert [r["t"] for r in rows] == [0.45, 1.05]
    assert abs(rows[0]["value"] - 0.171875) < 1e-3
    assert abs(rows[1]["value"] - 0.008275) < 1e-3


def test_simulate_writes_output_file(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    code, out, _ = run(capsys, "simulate", *FAST, "--trials", "5", "--seed", "3", "--t-max", "0.5",
                       "--output", str(path))
    assert code == 0 and out == ""
    rows = parse_csv(path.read_text())
    assert rows[0][:4] == (0.5, "NOW", "rxc", "normalized_loss")


def test_simulate_threads_do_not_change_output(capsys):
    args = ["simulate", *FAST, "--trials", "10", "--seed", "9", "--t-grid", "0.3,0.8"]
    _, one, _ = run(capsys, *args, "--threads", "1")
    _, many, _ = run(capsys, *args, "--threads", "4")
    assert one == many


def test_simulate_records_in_json(capsys):
    code, out, _ = run(capsys, "simulate", *FAST, "--trials", "2", "--t-max", "1", "--format", "json", "--records")
    assert code == 0
    assert len(json.loads(out)["trials"]) == 2


def test_sweep_labels_each_value(capsys):
    code, out, _ = run(capsys, "sweep", "--param", "code.W", "--values", "15,30", "--t-max", "0.6")
    assert code == 0
    schemes = [r[1] for r in parse_csv(out) if r[3] == "normalized_loss"]
    assert schemes == ["NOW[code.W=15]", "NOW[code.W=30]"]


def test_sweep_json_list_values(capsys):
    code, out, _ = run(capsys, "sweep", "--param", "code.family", "--values", '["NOW", "EW"]',
                       "--mode", "decode-prob")
    assert code == 0
    assert {r[1] for r in parse_csv(out)} == {'NOW[code.family="NOW"]', 'EW[code.family="EW"]'}


@pytest.mark.parametrize("argv", [
    ["analyze", "loss", "--workers", "0"],
    ["analyze", "loss", "--config", "/nonexistent/cfg.json"],
    ["analyze", "loss", "--config", "preset:nope"],
    ["analyze", "loss", "--set", "code.unknown=1"],
    ["analyze", "loss", "--set", "novalue"],
    ["simulate", "--config", "preset:now-gradient", "--set", "synth.a=\"missing\""],
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "config error" in err


def test_runtime_error_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", "loss", "--output", str(tmp_path / "nodir" / "x.csv"))
    assert code == 1 and "nodir" in err


def test_config_file(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"code": {"family": "MDS"}, "latency": {"t_grid": [0.975]}}))
    code, out, _ = run(capsys, "analyze", "loss", "--config", str(path))
    assert code == 0
    loss = [r[4] for r in parse_csv(out) if r[3] == "normalized_loss"]
    assert abs(loss[0] - 8.033e-5) < 1e-5


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "uepmm", "analyze", "decode-prob", "--max-n", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.startswith("t,scheme,partition,metric,value\n")
