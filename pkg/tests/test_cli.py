import json
import math
import subprocess
import sys

import pytest

from ellipsoidvol.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_forward_json(capsys):
    code, out, _ = call(capsys, "forward", "--axes", "1,1,1", "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert set(rec) == {"v1", "v2", "v3"}
    assert rec["v1"] == pytest.approx(4.0, rel=1e-12)
    assert rec["v2"] == pytest.approx(6.283185307, rel=1e-9)
    assert rec["v3"] == pytest.approx(4.188790205, rel=1e-9)


def test_forward_human_rounds(capsys):
    code, out, _ = call(capsys, "forward", "--axes", "2,1,1")
    assert code == 0
    assert "v1: 5.52069199" in out


def test_forward_csv_full_precision(capsys):
    _, out, _ = call(capsys, "forward", "--axes", "3,2,1", "--format", "csv")
    header, row = out.splitlines()
    assert header == "v1,v2,v3"
    assert all(len(x.replace(".", "").replace("e", "").lstrip("0")) >= 15 for x in row.split(",")[:2])


def test_invert_ball(capsys):
    code, out, _ = call(capsys, "invert", "--volumes", "4,6.283185307,4.188790205", "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert set(rec) == {"axes", "residual", "iterations", "status"}
    assert rec["status"] == "Converged"
    assert rec["axes"] == pytest.approx([1, 1, 1], rel=1e-6)


def test_invert_human(capsys):
    code, out, _ = call(capsys, "invert", "--volumes", "4,6.283185307,4.188790205")
    assert code == 0
    assert "axes: 1, 1, 1" in out and "status: Converged" in out


def test_invert_infeasible_exit(capsys):
    code, out, err = call(capsys, "invert", "--volumes", f"1,{2 * math.pi},{4 * math.pi / 3}", "--format", "json")
    assert code == 1
    assert json.loads(out)["status"] == "Infeasible"
    assert "ball bound" in err


def test_invert_no_convergence_exit(capsys):
    code, out, _ = call(capsys, "invert", "--volumes", "4.5,100,4.18879", "--max-iter", "30", "--format", "json")
    assert code == 3
    assert json.loads(out)["status"] == "NoConvergence"


@pytest.mark.parametrize(
    "argv",
    [
        ["mc", "tsirelson", "--axes", "1,1,1,1", "--m", "2", "--samples", "20000", "--seed", "5", "--streams", "3"],
        ["mc", "kubota", "--axes", "2,1,1", "--k", "2", "--samples", "20000", "--seed", "5"],
        ["mc", "steiner", "--axes", "2,1,0.5", "--t", "0.5", "--samples", "20000", "--seed", "5"],
    ],
)
def test_mc_json_byte_identical(capsys, argv):
    code, first, _ = call(capsys, *argv, "--format", "json")
    assert code == 0
    _, second, _ = call(capsys, *argv, "--format", "json")
    assert first == second
    rec = json.loads(first)
    assert {"mean", "std_error", "samples"} <= set(rec)
    assert rec["samples"] == 20000


def test_verify_kernel(capsys):
    code, out, _ = call(capsys, "verify", "kernel")
    assert code == 0
    assert "min value <= 0 everywhere, zero locus st=1" in out


def test_verify_identity(capsys):
    code, out, _ = call(capsys, "verify", "identity", "--count", "500", "--format", "json")
    assert code == 0
    assert json.loads(out)["anchor_lhs"] == pytest.approx(-9 / 1300)


def test_verify_lemma1(capsys):
    code, out, _ = call(capsys, "verify", "lemma1", "--C", "1,8", "--format", "json")
    assert code == 0
    pts = json.loads(out)["critical_points"]
    assert pts["8"] == pytest.approx([2.0], rel=1e-8)


def test_verify_lemma2(capsys):
    code, out, _ = call(capsys, "verify", "lemma2", "--count", "50", "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert rec["sign"] == 1 and rec["min_abs_det"] > 0


def test_trace(capsys, tmp_path):
    out_file = tmp_path / "n.csv"
    code, out, _ = call(capsys, "trace", "--axes", "2,1.5,1", "--step", "0.05", "--out", str(out_file), "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert rec["closed"] and rec["symmetric_points"] == 6
    assert out_file.read_text().startswith("a,b,c,v2,arc_index\n")


def test_trace_ball_is_input_error(capsys, tmp_path):
    code, _, err = call(capsys, "trace", "--axes", "1,1,1", "--out", str(tmp_path / "x.csv"))
    assert code == 1
    assert "ball" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["forward"],
        ["forward", "--axes", "1,1"],
        ["forward", "--axes", "1,-1,1"],
        ["forward", "--axes", "a,b,c"],
        ["mc", "kubota", "--axes", "1,1,1", "--k", "3", "--samples", "10", "--seed", "1"],
        ["mc", "tsirelson", "--axes", "1,1", "--m", "3", "--samples", "10", "--seed", "1"],
        ["mc", "steiner", "--axes", "1,1,1", "--t", "0", "--samples", "10", "--seed", "1"],
        ["bogus"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 1
    assert err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ellipsoidvol", "forward", "--axes", "1,1,1", "--format", "json"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["v1"] == pytest.approx(4.0)
