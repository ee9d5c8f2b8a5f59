import json
import subprocess
import sys

import pytest

from fracapprox.cli import main
from fracapprox.csvio import read_csv


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_green_verify_rows_and_reruns(tmp_path):
    args = ["green-verify", "--n", "1", "--s", "0.5", "--eps-count", "7", "--pairs", "10"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    header, cols, rows = read_csv(tmp_path / "a" / "goa_limit.csv")
    assert cols == ["eps", "lhs", "rhs", "ratio"]
    assert len(rows) == 7
    assert header["command"] == "green-verify"
    assert len(header["manifest_sha256"]) == 64
    for name in ("goa_limit.csv", "footnote.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "green-verify-manifest.json").read_text())
    assert man["passed"] and man["seed"] == 0
    assert "wall_clock_s" in man["stats"]


def test_eigen_command(tmp_path):
    assert run(tmp_path, "eigen", "--n", "1", "--s", "0.5", "--degree", "160") == 0
    _, cols, rows = read_csv(tmp_path / "eigen.csv")
    assert len(rows) == 1
    assert rows[0][cols.index("lambda_star")] == pytest.approx(1.15777388, rel=1e-6)
    assert rows[0][cols.index("kappa_star")] == pytest.approx(0.741529080, rel=1e-6)


def test_solve_command(tmp_path):
    assert run(tmp_path, "solve", "--n", "1", "--s", "0.5") == 0
    _, cols, rows = read_csv(tmp_path / "solution.csv")
    assert max(r[cols.index("rel_error")] for r in rows) < 1e-3


def test_approximate_command(tmp_path):
    assert run(tmp_path, "approximate", "--s", "0.5", "--target", "x^2/2", "--eps", "0.05") == 0
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["achieved_error"] <= 0.05
    _, cols, rows = read_csv(tmp_path / "error_map.csv")
    assert cols == ["x", "error"] and len(rows) == 17


def test_approximate_failure_exit_code(tmp_path):
    assert run(tmp_path, "approximate", "--s", "0.5", "--target", "x^2", "--eps", "1e-9") == 1
    man = json.loads((tmp_path / "approximate-manifest.json").read_text())
    assert not man["passed"]
    assert man["summary"]["best_error"] > 0


@pytest.mark.parametrize(
    "argv",
    [
        ["eigen", "--n", "1"],
        ["approximate", "--s", "0.5", "--target", "y^2"],
        ["approximate", "--s", "0.5", "--target", "x", "--eps", "-1"],
        ["green-verify", "--s", "0.5", "--eps-min", "0.1", "--eps-max", "0.01"],
        ["eigen", "--s", "1.5"],
        ["nonsense"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[approximator]\nnot_an_option = 1\n")
    assert run(tmp_path, "approximate", "--s", "0.5", "--target", "x", "--config", str(cfg)) == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "fracapprox.cli", "--version"], capture_output=True, text=True
    )
    assert out.returncode == 0 and out.stdout.strip()
