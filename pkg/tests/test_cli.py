import subprocess
import sys

import pytest

from fostab.cli import main

from conftest import SPECS


def run(*args):
    return main([str(a) for a in args])


def test_analyze_boost_stable(capsys):
    assert run("analyze", SPECS / "boost_converter.json", "--at", "1,1") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Stable" and out[1] == "rhp count: 0" and out[2].startswith("margin: ")


def test_analyze_half_order(capsys):
    assert run("analyze", SPECS / "half_order_scalar.json") == 1
    assert capsys.readouterr().out.startswith("Unstable(1)\n")


def test_analyze_marginal(tmp_path, capsys):
    spec = tmp_path / "axis.json"
    spec.write_text('{"terms": [["1", "2"], ["1", "0"]]}')
    assert run("analyze", spec) == 2
    assert capsys.readouterr().out.startswith("Marginal")


def test_invalid_order_exit_3(capsys):
    assert run("analyze", SPECS / "order_out_of_range.json") == 3
    assert "outside the open interval" in capsys.readouterr().err


def test_malformed_spec_exit_3(tmp_path, capsys):
    spec = tmp_path / "broken.json"
    spec.write_text('{"A": [[1]],\n "orders": [0.5,]}')
    assert run("analyze", spec) == 3
    assert "broken.json:2:" in capsys.readouterr().err


def test_map_one_parameter_suggests_scan(capsys):
    assert run("map", SPECS / "boost_alpha_scan.json", "--res", 16) == 3
    assert "scan" in capsys.readouterr().err


def test_scan(tmp_path):
    assert run("scan", SPECS / "boost_alpha_scan.json", "--res", 16, "--out", tmp_path) == 0
    lines = (tmp_path / "scan.csv").read_text().splitlines()
    assert lines[0] == "p,label" and len(lines) == 17
    labels = [int(l.split(",")[1]) for l in lines[1:]]
    assert labels[0] == 0 and labels[-1] > 0


def test_map_outputs_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("map", SPECS / "boost_converter.json", "--res", 16, "--out", out, "--svg") == 0
    for name in ("grid.csv", "regions.txt", "boundary.csv", "map.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    grid = (a / "grid.csv").read_text().splitlines()
    assert grid[0] == "p,q,label,component" and len(grid) == 257
    assert grid[1] == "0.0625,0.0625,0,0"
    boundary = (a / "boundary.csv").read_text()
    assert boundary.startswith("p,q,r,refined\n")
    svg = (a / "map.svg").read_text()
    assert svg.startswith("<svg") and ">alpha<" in svg and ">beta<" in svg and "<polyline" in svg
    assert "regions: 2" in capsys.readouterr().out


def test_boundary_command(tmp_path, capsys):
    assert run("boundary", SPECS / "boost_converter.json", "--res", 16, "--out", tmp_path) == 0
    text = (tmp_path / "boundary.csv").read_text()
    rows = [r for r in text.splitlines()[1:] if r]
    assert rows and all(len(r.split(",")) == 4 and r.endswith(",1") for r in rows)


def test_oracle_degree_148(tmp_path, capsys):
    assert run("oracle", SPECS / "two_state_67_81.json", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "m: 100\n" in out and "degree: 148\n" in out
    roots = (tmp_path / "roots.csv").read_text().splitlines()
    assert roots[0] == "re,im,arg" and len(roots) == 149


def test_oracle_degree_129(capsys):
    run("oracle", SPECS / "degree129_polynomial.json")
    assert "roots: 129\n" in capsys.readouterr().out


def test_oracle_integer_orders(tmp_path, capsys):
    spec = tmp_path / "ones.json"
    spec.write_text('{"A": [[0, 1], [-2, -3]], "orders": [1, 1]}')
    assert run("oracle", spec, "--out", tmp_path) == 0
    roots = sorted(float(l.split(",")[0]) for l in (tmp_path / "roots.csv").read_text().splitlines()[1:])
    assert roots == pytest.approx([-2.0, -1.0])


def test_oracle_rejects_float_orders(tmp_path, capsys):
    spec = tmp_path / "float.json"
    spec.write_text('{"A": [[-1]], "orders": [0.7]}')
    assert run("oracle", spec) == 3
    assert "analyze" in capsys.readouterr().err


@pytest.mark.parametrize("spec, at, extra, want", [
    ("boost_converter.json", "1,1", ["--h", "2e-5", "--horizon", "0.05"], "Decaying"),
    ("half_order_scalar.json", None, ["--horizon", "5"], "Growing"),
    ("zero_matrix.json", None, ["--horizon", "2"], "Inconclusive"),
])
def test_simulate(spec, at, extra, want, tmp_path, capsys):
    args = ["simulate", SPECS / spec, "--out", tmp_path, *extra] + (["--at", at] if at else [])
    assert run(*args) == 0
    assert capsys.readouterr().out.strip() == want
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,x1")


def test_simulate_random_initial_state_is_seeded(tmp_path):
    for out in ("a", "b"):
        assert run("--seed", 4, "simulate", SPECS / "zero_matrix.json", "--x0", "random", "--horizon", "1",
                   "--out", tmp_path / out) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fostab", "analyze", str(SPECS / "half_order_scalar.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stdout.startswith("Unstable(1)")
