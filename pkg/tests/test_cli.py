import json
import os

import pytest

from fieldalg.cli import ConfigError, main, parse_config_text, resolve_config, CCR_SCHEMA


def run_cli(args, env=None):
    old = {}
    env = env or {}
    for k, v in env.items():
        old[k] = os.environ.get(k)
        os.environ[k] = v
    try:
        return main(args)
    finally:
        for k, v in old.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


class TestConfigParsing:
    def test_key_value_lines(self):
        cfg = parse_config_text("# comment\n a = 1 \n\nb=two\n")
        assert cfg == {"a": "1", "b": "two"}

    def test_duplicate_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("a = 1\na = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just words\n")

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("no_such_key = 1\n")
        with pytest.raises(ConfigError):
            resolve_config(CCR_SCHEMA, str(p))

    def test_type_coercion(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("grid_counts = 64,128\ntolerance_grid = 1e-5\n")
        cfg = resolve_config(CCR_SCHEMA, str(p))
        assert cfg["grid_counts"] == [64, 128]
        assert cfg["tolerance_grid"] == 1e-5

    def test_bad_value_exit_code(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("grid_counts = sixty\n")
        assert run_cli(["ccr-check", str(p)]) == 2

    def test_env_output_dir_override(self, tmp_path):
        cfg = resolve_config(CCR_SCHEMA, None)
        assert cfg["output_dir"] == "fieldalg-out/ccr"
        os.environ["FIELDALG_OUTPUT_DIR"] = str(tmp_path / "alt")
        try:
            cfg2 = resolve_config(CCR_SCHEMA, None)
            assert cfg2["output_dir"] == str(tmp_path / "alt")
        finally:
            del os.environ["FIELDALG_OUTPUT_DIR"]


class TestCcrCommand:
    def test_pass_and_outputs(self, tmp_path):
        cfgfile = tmp_path / "ccr.cfg"
        out = tmp_path / "out"
        cfgfile.write_text(
            "output_dir = %s\nfinweyl_moduli = 2,3\ngrid_counts = 64,128\n" % out
        )
        code = run_cli(["ccr-check", str(cfgfile)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["passed"] is True
        assert report["command"] == "ccr-check"
        assert "config_hash" in report
        assert "module_tolerances" in report
        assert (out / "finweyl_residuals.csv").exists()
        assert (out / "grid_residuals.csv").exists()
        assert (out / "plotdata" / "grid_ccr.dat").exists()
        assert (out / "grid_ccr.png").exists()

    def test_designed_failure_path(self, tmp_path):
        cfgfile = tmp_path / "ccr.cfg"
        out = tmp_path / "out"
        cfgfile.write_text(
            "output_dir = %s\nfinweyl_moduli = 2\ngrid_counts = 64,128\n"
            "include_pathological = true\n" % out
        )
        code = run_cli(["ccr-check", str(cfgfile)])
        assert code == 1
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["pathological_pair"]["passed"] is False

    def test_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            cfgfile = tmp_path / ("%s.cfg" % out.name)
            cfgfile.write_text(
                "output_dir = %s\nfinweyl_moduli = 2\ngrid_counts = 64\n" % out
            )
            assert run_cli(["ccr-check", str(cfgfile)]) == 0
        r1 = (out1 / "report.json").read_bytes()
        r2 = (out2 / "report.json").read_bytes()
        # identical up to the embedded output path
        assert r1.replace(str(out1).encode(), b"") == r2.replace(
            str(out2).encode(), b""
        )


class TestScenarioCommands:
    def test_demo2d(self, tmp_path):
        out = tmp_path / "demo"
        cfgfile = tmp_path / "demo.cfg"
        cfgfile.write_text("output_dir = %s\nm = 128\n" % out)
        assert run_cli(["demo2d", str(cfgfile)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["rotation_identity"]["passed"]
        assert report["checks"]["dilation_covariance"]["passed"]
        assert (out / "rotation_sweep.png").exists()

    def test_aniso(self, tmp_path):
        out = tmp_path / "aniso"
        cfgfile = tmp_path / "aniso.cfg"
        cfgfile.write_text("output_dir = %s\nm = 256\nhalf_width = 32\n" % out)
        assert run_cli(["aniso", str(cfgfile)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["step_limits_differ"]["passed"]
        assert report["checks"]["bump_limits_agree"]["passed"]

    def test_hvz_1d(self, tmp_path):
        out = tmp_path / "hvz"
        cfgfile = tmp_path / "hvz.cfg"
        cfgfile.write_text(
            "output_dir = %s\nm = 256\nhalf_width = 10\ndynamic_check = true\n" % out
        )
        assert run_cli(["hvz", str(cfgfile)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["well_1d"]["passed"]
        assert (out / "well1d_spectrum.png").exists()

    def test_grading(self, tmp_path):
        out = tmp_path / "grading"
        cfgfile = tmp_path / "grading.cfg"
        cfgfile.write_text("output_dir = %s\nm = 128\nn_generators = 4\n" % out)
        assert run_cli(["grading", str(cfgfile)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["moebius_round_trip"]["passed"]
        assert report["checks"]["projection_dichotomy"]["passed"]
        assert report["checks"]["boolean_square_recovery"]["passed"]

    def test_membership_small(self, tmp_path):
        out = tmp_path / "membership"
        cfgfile = tmp_path / "mem.cfg"
        cfgfile.write_text("output_dir = %s\nm_list = 128,256\n" % out)
        assert run_cli(["membership", str(cfgfile)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["checks"]["basis_independence"]["passed"]
