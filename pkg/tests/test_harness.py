import csv
import json
import os

import pytest
from numpy.testing import assert_allclose

from blowup.config import canonical_config, load_config
from blowup.harness import (EXIT_DISCREPANCY, EXIT_INADMISSIBLE,
                            EXIT_SOLVER_FAILURE, EXIT_VALIDATED,
                            cmd_constants, cmd_solve, cmd_validate,
                            cmd_verify, spec_hash)


def _canonical(tmp_path, **run_overrides):
    cfg = canonical_config()
    for key, val in run_overrides.items():
        setattr(cfg, key, val)
    cfg.out_dir = str(tmp_path)
    return cfg


class TestConstantsCommand:
    def test_canonical_record_and_file(self, tmp_path):
        cfg = _canonical(tmp_path)
        record, code = cmd_constants(cfg, quiet=True)
        assert code == EXIT_VALIDATED
        assert record["xi0"] == 1.0
        assert record["C1"] == 0.0
        assert_allclose(record["C2"], 1.0 / 3.0)
        with open(tmp_path / "constants.json") as fh:
            on_disk = json.load(fh)
        assert on_disk == json.loads(json.dumps(record))

    def test_inadmissible_config_exits_2(self, tmp_path):
        cfg = load_config({"problem": {
            "p": 2.0,
            "nonlinearity": {"family": "pure_power", "sigma": 0.0},
        }})
        cfg.out_dir = str(tmp_path)
        record, code = cmd_constants(cfg, quiet=True)
        assert code == EXIT_INADMISSIBLE
        assert "error" in record


class TestVerifyCommand:
    def test_transform_suite_passes_and_writes_csv(self, tmp_path):
        cfg = _canonical(tmp_path)
        record, code = cmd_verify(cfg, "lemma3", quiet=True)
        assert code == EXIT_VALIDATED
        assert (tmp_path / "lemma3.csv").exists()
        assert (tmp_path / "lemma3.json").exists()

    def test_unknown_suite_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            cmd_verify(_canonical(tmp_path), "lemma9", quiet=True)


class TestSolveCommand:
    def test_writes_solution_with_provenance_header(self, tmp_path):
        cfg = _canonical(tmp_path)
        record, code = cmd_solve(cfg, quiet=True)
        assert code == EXIT_VALIDATED
        path = tmp_path / "solution.csv"
        text = path.read_text().splitlines()
        header = [ln for ln in text if ln.startswith("#")]
        assert any(f"spec={spec_hash(cfg)}" in ln for ln in header)
        assert any(ln.startswith("# M=") for ln in header)
        assert any("finest_rel=" in ln for ln in header)
        assert any("residual_norm=" in ln for ln in header)
        body = [ln for ln in text if not ln.startswith("#")]
        reader = csv.DictReader(body)
        assert reader.fieldnames == ["r", "d", "u", "flux"]
        rows = list(reader)
        assert len(rows) > 100
        assert float(rows[-1]["u"]) == record["M"]


class TestValidateCommand:
    def test_canonical_validates(self, tmp_path):
        cfg = _canonical(tmp_path)
        report, code = cmd_validate(cfg, quiet=True)
        assert code == EXIT_VALIDATED
        assert report["validated"] is True
        assert report["discrepancy"] < cfg.slope_tol
        assert report["fit"]["reliable"]
        with open(tmp_path / "report.json") as fh:
            assert json.load(fh)["spec_hash"] == spec_hash(cfg)

    def test_tight_threshold_reports_discrepancy(self, tmp_path):
        cfg = _canonical(tmp_path, slope_tol=0.01)
        report, code = cmd_validate(cfg, quiet=True)
        assert code == EXIT_DISCREPANCY
        assert report["validated"] is False

    def test_exhausted_continuation_exits_3(self, tmp_path):
        cfg = _canonical(tmp_path, max_levels=2)
        report, code = cmd_validate(cfg, quiet=True)
        assert code == EXIT_SOLVER_FAILURE
        assert "solver failure" in report["error"]

    def test_inadmissible_exits_2_with_report(self, tmp_path):
        cfg = load_config({"problem": {
            "p": 2.0,
            "nonlinearity": {"family": "pure_power", "sigma": 0.0},
        }})
        cfg.out_dir = str(tmp_path)
        report, code = cmd_validate(cfg, quiet=True)
        assert code == EXIT_INADMISSIBLE
        assert os.path.exists(tmp_path / "report.json")


class TestSpecHash:
    def test_depends_on_problem_not_run_settings(self):
        a = canonical_config()
        b = canonical_config()
        b.tol = 1e-3
        b.out_dir = "elsewhere"
        assert spec_hash(a) == spec_hash(b)
        c = load_config({"problem": {
            "p": 3.0,
            "nonlinearity": {"family": "pure_power", "sigma": 2.0, "B": 1e-6},
        }})
        assert spec_hash(c) != spec_hash(a)
