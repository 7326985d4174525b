"""Command-line interface: every command runs, outputs are deterministic."""

import json

import pytest
from click.testing import CliRunner

from harmonic_lattice.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, args):
    r = runner.invoke(main, args)
    assert r.exit_code == 0, r.output
    return r


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestCommandsRun:
    def test_solve_kernel(self, runner, tmp_path):
        out = tmp_path / "u.json"
        run_ok(runner, ["solve", "--n", "4", "--seed", "1", "--out", str(out)])
        doc = read_json(out)
        assert doc["tool"] == "harmlat"
        assert doc["command"] == "solve"
        assert doc["rng"] == {"algorithm": "philox", "seed": 1}

    def test_solve_exact_from_file(self, runner, tmp_path):
        from harmonic_lattice.dirichlet import BoundaryData, boundary_cells
        from harmonic_lattice.numeric import Scalar

        data = BoundaryData(
            2, {c: Scalar.rational(i) for i, c in enumerate(boundary_cells(2))}
        )
        bpath = tmp_path / "b.json"
        bpath.write_text(json.dumps(data.to_json()))
        out = tmp_path / "u.json"
        run_ok(
            runner,
            ["solve", "--n", "2", "--boundary", str(bpath), "--method", "exact", "--out", str(out)],
        )
        assert read_json(out)["scalar_kind"] == "rational"

    def test_kernel_dump(self, runner, tmp_path):
        out = tmp_path / "k.csv"
        run_ok(runner, ["kernel-dump", "--n", "2", "--out", str(out)])
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# tool=harmlat")
        assert "xn,xm,yn,ym,value" in lines

    def test_extend_lshape(self, runner, tmp_path):
        out = tmp_path / "l.json"
        run_ok(
            runner,
            ["extend-lshape", "--a2", "6", "--b2", "4", "--seed", "2", "--out", str(out)],
        )

    def test_halfplane(self, runner, tmp_path):
        out = tmp_path / "h.json"
        run_ok(runner, ["halfplane", "--n", "6", "--values", "1,-2,3", "--out", str(out)])

    def test_example_and_portion(self, runner, tmp_path):
        out = tmp_path / "e.csv"
        run_ok(
            runner,
            ["example", "--name", "chelkak34", "--window", "5", "--format", "csv", "--out", str(out)],
        )
        p = tmp_path / "p.json"
        run_ok(runner, ["portion", "--name", "chelkak34", "--window", "20", "--out", str(p)])
        frac = read_json(p)["result"]["fraction_float"]
        assert abs(frac - 0.75) < 0.05

    def test_growth_and_doubling(self, runner, tmp_path):
        g = tmp_path / "g.csv"
        run_ok(runner, ["growth", "--example", "chelkak34", "--radii", "1..20", "--out", str(g)])
        assert "fitted_slope" in g.read_text()
        d = tmp_path / "d.csv"
        run_ok(
            runner,
            ["doubling", "--example", "chelkak34", "--radii", "2,4,8", "--out", str(d)],
        )
        assert "exponential" in d.read_text()

    def test_remez_check(self, runner, tmp_path):
        out = tmp_path / "r.json"
        run_ok(
            runner,
            [
                "remez-check", "--poly", "0,0,1", "--lo", "0", "--hi", "10",
                "--points", "0,1,2,3,4,5", "--bound-m", "25", "--out", str(out),
            ],
        )
        res = read_json(out)["result"]
        assert res["max_attained"] == "100"
        assert res["discrete_dominates"] is True

    def test_propagate(self, runner, tmp_path):
        out = tmp_path / "pr.json"
        run_ok(
            runner,
            ["propagate", "--n", "64", "--sigma", "1", "--seed", "3", "--out", str(out)],
        )
        res = read_json(out)["result"]
        assert res["dominates"] is True

    def test_three_circle(self, runner, tmp_path):
        out = tmp_path / "tc.json"
        run_ok(
            runner,
            ["three-circle", "--example", "chelkak34", "--n", "12", "--sigma", "1", "--out", str(out)],
        )
        assert "alpha_fit" in read_json(out)["result"]

    def test_goodrect_scan(self, runner, tmp_path):
        out = tmp_path / "gs.json"
        run_ok(
            runner,
            [
                "goodrect-scan", "--example", "halfplane", "--values", "1",
                "--k", "10", "--window", "40", "--out", str(out),
            ],
        )
        assert "bad_fraction" in read_json(out)["result"]

    def test_vitali(self, runner, tmp_path):
        out = tmp_path / "v.json"
        run_ok(runner, ["vitali", "--seed", "4", "--count", "8", "--out", str(out)])
        res = read_json(out)["result"]
        assert res["disjoint"] and res["tripled_covers"]


class TestDeterminism:
    @pytest.mark.parametrize(
        "args",
        [
            ["solve", "--n", "4", "--seed", "1"],
            ["kernel-dump", "--n", "3"],
            ["extend-lshape", "--a2", "6", "--b2", "4", "--seed", "2"],
            ["halfplane", "--n", "6", "--seed", "5"],
            ["example", "--name", "eigen2d", "--window", "4"],
            ["portion", "--name", "chelkak34", "--window", "10"],
            ["growth", "--example", "chelkak34", "--radii", "1..10"],
            ["doubling", "--example", "chelkak34", "--radii", "2,4"],
            ["remez-check", "--poly", "1,2,3", "--lo", "-1", "--hi", "1"],
            ["propagate", "--n", "64", "--sigma", "1", "--seed", "3"],
            ["three-circle", "--n", "12", "--seed", "3"],
            [
                "goodrect-scan", "--example", "halfplane", "--values", "1",
                "--k", "10", "--window", "40",
            ],
            ["vitali", "--seed", "4"],
        ],
    )
    def test_byte_identical_rerun(self, runner, tmp_path, args):
        outs = []
        for i in range(2):
            path = tmp_path / f"out{i}"
            run_ok(runner, args + ["--out", str(path)])
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]


class TestErrors:
    def test_precondition_failure_exit_1(self, runner, tmp_path):
        r = runner.invoke(
            main, ["solve", "--n", "4", "--out", str(tmp_path / "u.json")]
        )
        assert r.exit_code == 1

    def test_io_failure_exit_2(self, runner):
        r = runner.invoke(
            main,
            ["solve", "--n", "4", "--seed", "1", "--out", "/nonexistent/dir/u.json"],
        )
        assert r.exit_code == 2

    def test_missing_boundary_file_exit_2(self, runner, tmp_path):
        r = runner.invoke(
            main,
            [
                "solve", "--n", "4", "--boundary", str(tmp_path / "absent.json"),
                "--out", str(tmp_path / "u.json"),
            ],
        )
        assert r.exit_code == 2

    def test_config_file_fills_missing_flags(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 1}))
        out = tmp_path / "u.json"
        run_ok(
            runner, ["solve", "--n", "4", "--config", str(cfg), "--out", str(out)]
        )
        assert read_json(out)["config"]["seed"] == 1


class TestVerifyCommand:
    def test_quick_battery_passes(self, runner):
        r = runner.invoke(main, ["verify", "--level", "quick"])
        assert r.exit_code == 0, r.output
        assert "checks passed" in r.output
        assert "FAIL" not in r.output
