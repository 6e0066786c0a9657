"""CLI contract: exit codes, determinism, dumps, selftest."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from plab import cli
from plab.field import load_field


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run_cli(args):
    return cli.main(args)


class TestSolveCommand:
    def test_affine_boundary_dump(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "p": 3.0, "grid": {"n": 33},
            "problem": {"kind": "catalogue", "name": "affine", "a": [3.0, -2.0],
                        "b": 1.0},
            "seed": 1})
        out = tmp_path / "out"
        assert run_cli(["solve", "--config", cfg, "--out", str(out)]) == 0
        u = load_field(out / "u")
        X, Y = u.grid.meshgrid()
        np.testing.assert_allclose(u.values, 3 * X - 2 * Y + 1, atol=1e-9)
        assert (out / "convergence.json").exists()
        assert (out / "a_grad_u.csv").exists()

    def test_missing_p_exits_3_naming_field(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "bad.json", {"grid": {"n": 17},
                                                  "problem": {"kind": "saddle",
                                                              "seed": 1}})
        assert run_cli(["solve", "--config", cfg, "--out",
                        str(tmp_path / "o")]) == 3
        err = capsys.readouterr().err
        assert "'p'" in err

    def test_invalid_json_exits_3(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run_cli(["solve", "--config", str(path)]) == 3

    def test_solver_failure_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "p": 4.5, "grid": {"n": 65},
            "problem": {"kind": "pharmonic_trig", "seed": 3},
            "solver": {"max_iter": 1, "continuation": False},
            "seed": 1})
        assert run_cli(["solve", "--config", cfg, "--out",
                        str(tmp_path / "o")]) == 2

    def test_plots_rendered_by_default(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "p": 2.0, "grid": {"n": 33},
            "problem": {"kind": "pharmonic_trig", "seed": 2}, "seed": 2})
        out = tmp_path / "o"
        assert run_cli(["solve", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "convergence.png").exists()


class TestDecayCommand:
    def _config(self, tmp_path, **over):
        payload = {
            "p": 2.0, "grid": {"n": 129},
            "problem": {"kind": "pharmonic_trig", "seed": 5},
            "balls": {"count": 3},
            "decay": {"t0": 0.25, "theta": 0.5, "K": 4, "w": 1.0},
            "seed": 9}
        payload.update(over)
        return write_config(tmp_path, "d.json", payload)

    def test_runs_and_reports(self, tmp_path):
        cfg = self._config(tmp_path)
        out = tmp_path / "out"
        assert run_cli(["decay", "--config", cfg, "--out", str(out),
                        "--plot-tables"]) == 0
        lines = (out / "decay.csv").read_text().splitlines()
        assert lines[0] == "# seed=9"
        assert lines[3].split(",") == ["center_x", "center_y", "t0", "theta",
                                       "k", "t_k", "osc", "quantity", "w"]
        summary = json.loads((out / "decay_summary.json").read_text())
        assert "classification_histogram" in summary
        assert (out / "decay.dat").exists()
        assert (out / "decay.png").exists()

    def test_affine_reports_exact_decay(self, tmp_path):
        cfg = self._config(tmp_path, problem={"kind": "catalogue",
                                              "name": "affine"})
        out = tmp_path / "out"
        assert run_cli(["decay", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "decay_summary.json").read_text())
        assert summary["exact_decay_count"] == 3

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run_cli(["decay", "--config", cfg, "--out", str(out1)]) == 0
        assert run_cli(["decay", "--config", cfg, "--out", str(out2),
                        "--jobs", "2"]) == 0
        assert (out1 / "decay.csv").read_bytes() == (out2 / "decay.csv").read_bytes()
        assert (out1 / "decay_summary.json").read_bytes() == \
            (out2 / "decay_summary.json").read_bytes()

    def test_resolution_guard_exit_4(self, tmp_path):
        cfg = self._config(tmp_path, decay={"t0": 0.12, "theta": 0.5, "K": 5,
                                            "w": 1.0})
        # h = 1/128: only two scales survive the 4h guard, all chains fail
        assert run_cli(["decay", "--config", cfg, "--out",
                        str(tmp_path / "o")]) == 4

    def test_seed_flag_overrides(self, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert run_cli(["decay", "--config", cfg, "--out", str(out1),
                        "--seed", "123"]) == 0
        assert run_cli(["decay", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "decay.csv").read_bytes() != (out2 / "decay.csv").read_bytes()


class TestBesovCommand:
    def _config(self, tmp_path, rows, problem=None):
        payload = {
            "p": 3.0, "grid": {"n": 129},
            "problem": problem or {"kind": "pharmonic_trig", "seed": 4},
            "ball": {"cx": 0.5, "cy": 0.5, "r": 0.25},
            "ladder": {"R": 0.25, "J": 4},
            "smoothness": rows,
            "seed": 3}
        return write_config(tmp_path, "b.json", payload)

    def test_constant_flux_gives_zero(self, tmp_path):
        cfg = self._config(tmp_path, [{"s": 0.5, "rho": 2.0, "q": 2.0}],
                           problem={"kind": "catalogue", "name": "affine"})
        out = tmp_path / "out"
        assert run_cli(["besov", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "besov_summary.json").read_text())
        assert summary["rows"][0]["value"] <= 1e-12

    def test_rho_eq_q_besov_triebel_agree(self, tmp_path):
        rows = [{"s": 0.5, "rho": 2.0, "q": 2.0, "scale": "besov"},
                {"s": 0.5, "rho": 2.0, "q": 2.0, "scale": "triebel"}]
        cfg = self._config(tmp_path, rows)
        out = tmp_path / "out"
        assert run_cli(["besov", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "besov_summary.json").read_text())
        v1, v2 = (summary["rows"][0]["value"], summary["rows"][1]["value"])
        assert v1 == pytest.approx(v2, rel=1e-10)

    def test_inadmissible_row_skipped_with_reason(self, tmp_path):
        rows = [{"s": 0.5, "rho": 2.0, "q": 2.0},
                {"s": 0.5, "rho": 1.0, "q": 1e9}]  # embedding fails at p'=1.5
        cfg = self._config(tmp_path, rows)
        out = tmp_path / "out"
        assert run_cli(["besov", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "besov_summary.json").read_text())
        assert len(summary["rows"]) == 1
        assert summary["skipped"][0]["reason"]

    def test_all_skipped_exit_5(self, tmp_path):
        rows = [{"s": 0.5, "rho": 0.5, "q": 2.0}]
        cfg = self._config(tmp_path, rows)
        assert run_cli(["besov", "--config", cfg, "--out",
                        str(tmp_path / "o")]) == 5


class TestTransferCommand:
    def _config(self, tmp_path):
        return write_config(tmp_path, "t.json", {
            "p": 3.0, "grid": {"n": 129},
            "problem": {"kind": "manufactured", "seed": 30},
            "ball": {"cx": 0.5, "cy": 0.5, "r": 0.25},
            "ladder": {"R": 0.25, "J": 4},
            "count": 2,
            "smoothness": [{"s": 0.5, "rho": 2.0, "q": 2.0, "w": 1.5}],
            "seed": 8})

    def test_runs_and_is_deterministic_with_jobs(self, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run_cli(["transfer", "--config", cfg, "--out", str(out1)]) == 0
        assert run_cli(["transfer", "--config", cfg, "--out", str(out2),
                        "--jobs", "4"]) == 0
        assert (out1 / "transfer.csv").read_bytes() == \
            (out2 / "transfer.csv").read_bytes()
        summary = json.loads((out1 / "transfer_summary.json").read_text())
        assert summary["max_ratio"] > 0


class TestCatalogueCommand:
    def test_dumps_fields(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "p": 3.0, "grid": {"nx": 17, "ny": 17, "x0": 1.0, "y0": 1.0,
                               "h": 0.0625},
            "name": "radial", "seed": 0})
        out = tmp_path / "out"
        assert run_cli(["catalogue", "--config", cfg, "--out", str(out)]) == 0
        u = load_field(out / "radial_u")
        g = load_field(out / "radial_grad")
        assert u.values.shape == (17, 17)
        assert g.values.shape == (17, 17, 2)


class TestConfigRoundTrip:
    def test_parse_serialize_parse_identity(self, tmp_path):
        payload = {"p": 3.0, "grid": {"n": 33}, "seed": 5,
                   "problem": {"kind": "saddle", "seed": 2},
                   "smoothness": [{"s": 0.5, "rho": 2.0, "q": 2.0}]}
        text1 = json.dumps(payload, sort_keys=True)
        parsed = json.loads(text1)
        text2 = json.dumps(parsed, sort_keys=True)
        assert text1 == text2 and parsed == payload


class TestSelftest:
    def test_passes_in_clean_build(self, capsys):
        assert cli.cmd_selftest() == 0
        out = capsys.readouterr().out
        assert "all invariants hold" in out

    def test_fault_injection_names_monotonicity(self):
        env = dict(os.environ, PLAB_FAULT="a_map_sign")
        proc = subprocess.run(
            [sys.executable, "-m", "plab.cli", "selftest"], env=env,
            capture_output=True, text=True)
        assert proc.returncode == 1
        assert "monotonicity" in proc.stdout

    def test_repeated_runs_identical(self):
        proc1 = subprocess.run([sys.executable, "-m", "plab.cli", "selftest"],
                               capture_output=True, text=True)
        proc2 = subprocess.run([sys.executable, "-m", "plab.cli", "selftest"],
                               capture_output=True, text=True)
        assert proc1.returncode == proc2.returncode == 0
        assert proc1.stdout == proc2.stdout


class TestLogging:
    def test_bad_level_rejected(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PLAB_LOG", "verbose")
        cfg = write_config(tmp_path, "c.json", {"p": 2.0, "grid": {"n": 17},
                                                "problem": {"kind": "saddle",
                                                            "seed": 1},
                                                "seed": 1})
        assert run_cli(["solve", "--config", cfg]) == 3
