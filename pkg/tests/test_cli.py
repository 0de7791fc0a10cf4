import csv
import io
import json
import subprocess
import sys

import pytest

from diobound import cli, eigen


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_count_ball_example():
    code, out, err = call("lattice", "count-ball", "-d", "2", "-R", "2")
    assert code == 0
    assert json.loads(out)["count"] == 13
    assert err.startswith("config ")


def test_rdn_example():
    code, out, _ = call("nt", "rdn", "-d", "3", "-n", "1")
    assert code == 0 and json.loads(out)["count"] == 6


def test_selftest_passes():
    code, out, _ = call("selftest")
    rep = json.loads(out)
    assert code == 0
    assert rep["failed"] == 0 and rep["passed"] == len(rep["cases"]) >= 30


def test_unknown_group_prints_usage():
    code, _, err = call("frobnicate")
    assert code == 2 and "usage:" in err


def test_unknown_command_prints_usage():
    code, _, err = call("lattice", "frobnicate")
    assert code == 2 and "usage:" in err


def test_missing_command():
    code, _, err = call()
    assert code == 2 and "usage:" in err


@pytest.mark.parametrize("argv", [
    ("lattice", "fdelta", "--lam", "100", "--delta", "1.5", "--cap", "10"),
    ("nt", "zeta", "-d", "2", "-s", "0.5"),
    ("nt", "hardy", "-d", "9", "-n", "1"),
    ("lattice", "count-ball", "-d", "2", "-R", "abc"),
    ("lattice", "count-ball", "-d", "2", "-R", "2", "--workers", "0"),
    ("cutoff", "verify", "--oracle", "3,4", "--r", "1.2"),
])
def test_argument_errors_exit_2(argv):
    assert call(*argv)[0] == 2


def test_resource_error_exit_3():
    code, _, err = call("lattice", "count-ball", "-d", "6", "-R", "1e6")
    assert code == 3 and "cap" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diobound", "nt", "rdn", "-d", "2", "-n", "5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["count"] == 8


def test_timing_sidecar(tmp_path):
    side = tmp_path / "t.json"
    code, out, _ = call("lattice", "count-ball", "-d", "3", "-R", "5", "--timing", str(side))
    assert code == 0 and "elapsed" not in out
    assert json.loads(side.read_text())["elapsed_ms"] >= 0


def test_out_file(tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = call("lattice", "predict", "-d", "2", "--lam", "1e4", "--delta", "0.5", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["x_minus"] == pytest.approx(91.2042058761139)


def test_hardy_csv(tmp_path):
    path = tmp_path / "h.csv"
    code, out, _ = call("nt", "hardy", "-d", "8", "--N", "5", "--csv", str(path))
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["n", "exact", "hardy", "rel_err"]
    assert [int(r["exact"]) for r in rows] == [16, 112, 448, 1136, 2016]
    assert max(float(r["rel_err"]) for r in rows) < 1e-8


def test_symbol_commands(tmp_path):
    code, out, _ = call("symbol", "check", "--preset", "wave")
    assert code == 0 and json.loads(out)["certificate"]["verdict"] == "non-elliptic"
    code, out, _ = call("symbol", "witness", "--preset", "wave", "--count", "3")
    assert json.loads(out)["witness"]["points"] == [[1, 1], [2, 2], [3, 3]]
    f = tmp_path / "quartic.txt"
    f.write_text("4 0 1 0\n0 4 1 0\n")
    code, out, _ = call("symbol", "check", "--symbol", str(f))
    assert json.loads(out)["certificate"]["margin"] == pytest.approx(0.5)
    code, _, _ = call("symbol", "witness", "--preset", "laplacian")
    assert code == 2


def test_fdelta_solutions_csv(tmp_path):
    path = tmp_path / "s.csv"
    code, out, _ = call("lattice", "fdelta", "--lam", "100", "--delta", "0.5", "--cap", "20",
                        "--solutions-csv", str(path))
    assert code == 0 and json.loads(out)["count"] == 196
    assert len(path.read_text().strip().splitlines()) == 197


def test_mask_solve_verify_pipeline(tmp_path):
    mask, pairs, ratios = tmp_path / "m.pgm", tmp_path / "p.bin", tmp_path / "r.csv"
    assert call("eigen", "make-mask", "--kind", "lshape", "--N", "63", "--out", str(mask))[0] == 0
    assert eigen.DomainMask.load(mask).n_inside == 63**2 - 32**2
    code, out, _ = call("eigen", "solve", "--mask", str(mask), "--k", "6", "--out", str(pairs))
    assert code == 0 and len(json.loads(out)["lambda"]) == 6
    assert len(eigen.read_pairs(pairs)) == 6
    code, out, _ = call("cutoff", "verify", "--pairs", str(pairs), "--mask", str(mask),
                        "--x0", "0.8,0.8", "--r", "0.4", "--delta", "0.4")
    reps = json.loads(out)["reports"]
    assert code == 0 and all(r["partI_count"] == r["fdelta_count"] for r in reps)
    code, out, _ = call("bounds", "ratios", "--pairs", str(pairs), "--mask", str(mask),
                        "--r", "0.2", "--csv", str(ratios))
    assert code == 0 and len(list(csv.DictReader(ratios.open()))) == 6
    code, out, _ = call("bounds", "fit", "--csv", str(ratios), "--min-decades", "0.3")
    assert code == 0 and json.loads(out)["n"] == 6
    assert call("bounds", "fit", "--csv", str(ratios))[0] == 2  # span below 1.5 decades


def test_cutoff_oracle_commands():
    code, out, _ = call("cutoff", "deriv", "--oracle", "3,4", "--x0", "1.5707963267948966,1.5707963267948966")
    b = json.loads(out)["bounds"][0]
    assert code == 0 and b["sampled_sup"] <= b["bound"]
    code, out, _ = call("cutoff", "verify", "--oracle", "5,5", "--x0", "1.5707963267948966,1.5707963267948966",
                        "--alpha", "6")
    rep = json.loads(out)["reports"][0]
    assert rep["partI_count"] == rep["fdelta_count"] == 100


@pytest.mark.parametrize("argv", [
    ("lattice", "count-ball", "-d", "3", "-R", "60"),
    ("lattice", "fdelta", "--preset", "bilaplacian", "--lam", "1e6", "--delta", "0.3", "--cap", "60"),
    ("nt", "hardy", "-d", "6", "--N", "20"),
    ("bounds", "fdelta-scaling", "-d", "1"),
])
def test_workers_do_not_change_output(argv):
    outs = {call(*argv, "--workers", str(w))[1] for w in (1, 2, 8)}
    assert len(outs) == 1
