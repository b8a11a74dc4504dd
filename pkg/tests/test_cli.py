import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gm_torus.cli import main
from gm_torus.config import DEFAULT_TOLERANCES, parse_config
from gm_torus.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

FREE = """\
grid.dim = 1
grid.N = 64
potential.kind = zero
physics.P = 0.4
physics.V_target = 0.3
physics.P_count = 11
run.n_seeds = 4
run.invert_points = 3
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(args):
    return main([str(a) for a in args])


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.grid.points_per_axis == (128,)
        assert cfg.tol == DEFAULT_TOLERANCES
        assert len(cfg.scan_points()) == 21

    def test_unknown_key_has_line_number(self):
        with pytest.raises(ConfigError, match=r"<config>:3: unknown key 'grid.n'"):
            parse_config("grid.dim = 1\n# comment\ngrid.n = 64\n")

    def test_duplicate_and_malformed(self):
        with pytest.raises(ConfigError, match=":2: duplicate key"):
            parse_config("run.seed = 1\nrun.seed = 2\n")
        with pytest.raises(ConfigError, match=":1: expected"):
            parse_config("grid.N 64\n")
        with pytest.raises(ConfigError, match=":1: bad value for grid.N"):
            parse_config("grid.N = sixty\n")

    def test_semantic_errors_point_at_the_key(self):
        with pytest.raises(ConfigError, match=":2:"):
            parse_config("grid.dim = 2\nphysics.P = 0.1\n")
        with pytest.raises(ConfigError, match=":1:"):
            parse_config("grid.N = 7\n")
        with pytest.raises(ConfigError, match=":1:"):
            parse_config("potential.kind = quartic\n")
        with pytest.raises(ConfigError, match=":1:"):
            parse_config("potential.kind = trig\n")

    def test_tolerance_override(self):
        cfg = parse_config("run.tol.gradient = 1e-7\n")
        assert cfg.tol["gradient"] == 1e-7 and cfg.tol["hessian"] == 1e-4

    def test_reference_config_parses(self):
        from gm_torus.config import load_config

        cfg = load_config(CONFIGS / "trig_reference.cfg")
        assert cfg.P.tolist() == [0.4] and cfg.grid.points_per_axis == (128,)


class TestCommands:
    def test_solve_free(self, tmp_path):
        out = tmp_path / "out"
        assert run(["solve", "--config", write(tmp_path, FREE), "--out", out, "--quiet"]) == 0
        report = json.loads((out / "solve.json").read_text())
        assert report["solution"]["E0"] == 0.0
        for key, value in report["residuals"].items():
            if key.startswith("residual_"):
                assert value == 0.0, key
        assert report["residuals"]["Hbar"] == pytest.approx(0.08, abs=1e-15)

    def test_solve_dumps_fields(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path, FREE + "run.dump_fields = true\n")
        assert run(["solve", "--config", cfg, "--out", out, "--quiet"]) == 0
        from gm_torus.spectral_field import load_field

        assert np.allclose(load_field(out / "sigma.csv").values, 1.0)

    def test_scan_free_is_quadratic(self, tmp_path):
        out = tmp_path / "out"
        assert run(["scan", "--config", write(tmp_path, FREE), "--out", out, "--quiet"]) == 0
        rows = list(csv.DictReader(io.StringIO((out / "scan.csv").read_text())))
        assert len(rows) == 11
        for r in rows:
            assert float(r["Hbar"]) == pytest.approx(float(r["P"]) ** 2 / 2, abs=1e-14)
            assert float(r["V"]) == pytest.approx(float(r["P"]), abs=1e-12)
        assert json.loads((out / "scan.json").read_text())["convex"] is True

    def test_second_variation(self, tmp_path, capsys):
        cfg = write(tmp_path, FREE.replace("potential.kind = zero", "potential.kind = trig\npotential.terms = 1:1:0"))
        assert run(["second-variation", "--config", cfg, "--seed", 3, "--n-seeds", 2]) == 0
        captured = capsys.readouterr()
        records = json.loads(captured.out)
        assert [r["seed"] for r in records] == [3, 4]
        for r in records:
            assert r["sign"] in (-1, 1)
            assert abs(r["j2_fd"] - r["j2_general"]) <= 1e-5 * abs(r["j2_general"])
        assert "min" in captured.err and "max" in captured.err

    def test_invert_free(self, tmp_path):
        out = tmp_path / "out"
        assert run(["invert-v", "--config", write(tmp_path, FREE), "--out", out, "--quiet"]) == 0
        report = json.loads((out / "invert_v.json").read_text())
        assert report["P"] == pytest.approx([0.3], abs=1e-12)
        assert report["flux_residual"] <= 1e-12

    def test_verify_reference_exits_zero(self, tmp_path):
        out = tmp_path / "out"
        assert run(["verify", "--config", CONFIGS / "trig_reference.cfg", "--out", out, "--quiet"]) == 0
        report = json.loads((out / "verify.json").read_text())
        assert report["passed"] is True and report["breaches"] == []
        assert len(report["checks"]) > 30


class TestExitCodes:
    def test_verify_breach_exits_one(self, tmp_path):
        out = tmp_path / "out"
        cfg = write(tmp_path, (CONFIGS / "trig_reference.cfg").read_text() + "run.tol.residual = 1e-14\n")
        assert run(["verify", "--config", cfg, "--out", out, "--quiet"]) == 1
        report = json.loads((out / "verify.json").read_text())
        assert report["passed"] is False
        assert "residual_hj_v" in report["breaches"]

    def test_config_error_exits_two(self, tmp_path, capsys):
        assert run(["solve", "--config", write(tmp_path, "grid.N = 64\ngrid.bogus = 1\n")]) == 2
        assert ":2: unknown key" in capsys.readouterr().err
        assert run(["solve", "--config", tmp_path / "missing.cfg"]) == 2

    def test_solver_error_exits_three(self, tmp_path, capsys):
        text = "grid.N = 512\ngrid.L = 20\npotential.kind = wrapped_quadratic\n"
        assert run(["solve", "--config", write(tmp_path, text)]) == 3
        assert "PositivityError" in capsys.readouterr().err
        assert run(["solve", "--config", write(tmp_path, "grid.N = 8192\n", "big.cfg")]) == 3

    def test_invert_out_of_range_is_solver_error(self, tmp_path):
        cfg = write(tmp_path, FREE.replace("physics.V_target = 0.3", "physics.V_target = 9.0"))
        assert run(["invert-v", "--config", cfg, "--quiet"]) == 3


class TestReproducibility:
    @pytest.mark.parametrize("command,files", [
        ("solve", ["solve.json"]),
        ("scan", ["scan.csv", "scan.json"]),
        ("second-variation", ["second_variation.json"]),
    ])
    def test_byte_identical(self, tmp_path, command, files):
        cfg = write(tmp_path, FREE.replace("potential.kind = zero", "potential.kind = trig\npotential.terms = 1:1:0; 2:0:0.3"))
        for name in ("a", "b"):
            assert run([command, "--config", cfg, "--out", tmp_path / name, "--seed", 11, "--quiet"]) == 0
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "gm_torus", "solve", "--config", str(write(tmp_path, FREE)), "--quiet"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["solution"]["E0"] == 0.0
