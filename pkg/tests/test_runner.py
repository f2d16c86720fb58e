import json
import os

import pytest

from levyladder.fixtures import ConfigError
from levyladder import runner


BASE = {
    "seed": 42,
    "n": 3000,
    "chunk_size": 1024,
    "checks": [
        {"name": "p-estimate", "fixture": "P1", "t": 0.3,
         "u": [0.2, 1.1, 1.5, 1.8, 2.5]},
        {"name": "ct1", "fixture": "P1", "t": 0.5, "u": 0.25, "delta": 0.005, "n": 20000},
        {"name": "V-grid", "fixture": "B1", "t": [0.5, 1.0], "u": [0.5, 1.0]},
        {"name": "resolvent", "fixture": "S1", "q": 1.0, "u": 0.5, "n": 20000},
    ],
}


def _cfg(**over):
    raw = json.loads(json.dumps(BASE))
    raw.update(over)
    return raw


class TestConfigValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            runner.ExperimentConfig(_cfg(bogus=1))

    def test_unknown_check_key_names_path(self):
        raw = _cfg()
        raw["checks"][0]["typo"] = 1
        with pytest.raises(ConfigError, match=r"checks\[0\]"):
            runner.ExperimentConfig(raw)

    def test_unknown_check_name(self):
        raw = _cfg()
        raw["checks"][0]["name"] = "nonsense"
        with pytest.raises(ConfigError, match="unknown check"):
            runner.ExperimentConfig(raw)

    def test_fixture_kind_mismatch(self):
        raw = _cfg()
        raw["checks"] = [{"name": "quadruple", "fixture": "P1", "u": 1.0}]
        with pytest.raises(ConfigError, match="bivariate"):
            runner.ExperimentConfig(raw)

    def test_generic_branch_on_derivative_manifold_is_named(self):
        raw = _cfg()
        raw["checks"] = [{"name": "slfi", "fixture": "B1", "mu": 1.0, "rho": 2.0,
                          "ell": 1.0 + 1e-10, "nu": 1.0, "theta": 1.0}]
        with pytest.raises(ConfigError, match="derivative branch"):
            runner.ExperimentConfig(raw)

    def test_inline_fixture(self):
        raw = _cfg(fixtures={
            "X": {"kind": "levy", "drift": 1.0, "rate": 1.0,
                  "jumps": {"variant": "exponential", "rate": 1.0, "sign": -1}}
        })
        raw["checks"] = [{"name": "p-estimate", "fixture": "X", "t": 0.5, "u": 0.25}]
        cfg = runner.ExperimentConfig(raw)
        assert "X" in cfg.fixtures

    def test_inline_fixture_schema_error_names_key(self):
        raw = _cfg(fixtures={"X": {"kind": "levy", "drift": 1.0, "rate": 1.0,
                                   "jumps": {"variant": "wat"}}})
        with pytest.raises(ConfigError, match="fixtures.X.jumps"):
            runner.ExperimentConfig(raw)


class TestRun:
    def test_outputs_and_exit_status(self, tmp_path):
        out = str(tmp_path / "res")
        rc = runner.run(_cfg(out=out))
        assert rc == 0
        files = sorted(os.listdir(out))
        assert "summary.csv" in files and "monitors.csv" in files
        summary = (tmp_path / "res" / "summary.csv").read_text().splitlines()
        assert summary[0] == "check,fixture,params_hash,lhs,rhs,distance,budget,pass"
        assert len(summary) == 1 + len(BASE["checks"])
        assert all(line.endswith("PASS") for line in summary[1:])

    def test_rerun_is_byte_identical(self, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        runner.run(_cfg(out=out1))
        runner.run(_cfg(out=out2))
        for name in sorted(os.listdir(out1)):
            b1 = open(os.path.join(out1, name), "rb").read()
            b2 = open(os.path.join(out2, name), "rb").read()
            assert b1 == b2, name

    def test_workers_do_not_change_results(self, tmp_path):
        out1, out2 = str(tmp_path / "w1"), str(tmp_path / "w4")
        runner.run(_cfg(out=out1, workers=1))
        runner.run(_cfg(out=out2, workers=4))
        for name in sorted(os.listdir(out1)):
            b1 = open(os.path.join(out1, name), "rb").read()
            b2 = open(os.path.join(out2, name), "rb").read()
            assert b1 == b2, name

    def test_seed_changes_results(self, tmp_path):
        out1, out2 = str(tmp_path / "s1"), str(tmp_path / "s2")
        runner.run(_cfg(out=out1))
        runner.run(_cfg(out=out2, seed=43))
        assert (open(os.path.join(out1, "check00_p_estimate.csv"), "rb").read()
                != open(os.path.join(out2, "check00_p_estimate.csv"), "rb").read())


class TestMain:
    def test_cli_roundtrip(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(_cfg()))
        rc = runner.main(["--config", str(cfg_path), "--out", str(tmp_path / "o"),
                          "--seed", "42", "--workers", "2"])
        assert rc == 0
        assert (tmp_path / "o" / "summary.csv").exists()

    def test_cli_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps(_cfg(bogus=1)))
        assert runner.main(["--config", str(cfg_path)]) == 2

    def test_cli_missing_file(self):
        assert runner.main(["--config", "/nonexistent.json"]) == 2


class TestPlotData:
    def test_e2_support_columns_are_exactly_zero(self, tmp_path):
        # p(0.3, u) vanishes exactly for u in (n + 0.3, n + 1]
        out = str(tmp_path / "res")
        runner.run(_cfg(out=out))
        files = runner.report_plotdata(out)
        pfile = [f for f in files if "p_estimate" in f][0]
        rows = runner._read_csv(pfile)
        by_u = {float(r["x"]): float(r["y"]) for r in rows}
        assert by_u[1.5] == 0.0 and by_u[1.8] == 0.0 and by_u[2.5] == 0.0
        assert by_u[0.2] > 0.0 and by_u[1.1] > 0.0

    def test_idempotent_bytes(self, tmp_path):
        out = str(tmp_path / "res")
        runner.run(_cfg(out=out))
        files1 = runner.report_plotdata(out)
        blobs = [open(f, "rb").read() for f in files1]
        files2 = runner.report_plotdata(out)
        assert files1 == files2
        assert [open(f, "rb").read() for f in files2] == blobs

    def test_missing_directory_is_an_error(self):
        with pytest.raises(FileNotFoundError):
            runner.report_plotdata("/no/such/dir")

    def test_no_reshapeable_inputs_is_an_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            runner.report_plotdata(str(tmp_path))
