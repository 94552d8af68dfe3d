"""Configuration validation, exit codes, output files, and determinism."""

from __future__ import annotations

import copy
import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fracfield.cli import main, resolve_workers
from fracfield.config import (
    TASKS,
    canonical_json,
    default_config,
    load_config,
    validate_config,
)
from fracfield.errors import ConfigInvalid


def small_solve_config(**overrides) -> dict:
    """Disk config small enough that a solve run takes well under a second."""
    cfg = default_config("solve")
    cfg["domain"]["h"] = 0.15
    cfg["solver"]["n_starts"] = 2
    cfg.update(overrides)
    return cfg


def write_config(tmp_path: Path, cfg: dict, name: str = "cfg.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


class TestValidation:
    def test_defaults_validate_for_every_task(self):
        for task in TASKS:
            rc = validate_config(default_config(task))
            assert rc.task == task
            assert len(rc.config_hash) == 64

    def test_missing_alpha_names_the_field(self):
        cfg = default_config("solve")
        del cfg["model"]["alpha"]
        with pytest.raises(ConfigInvalid, match=r"model\.alpha"):
            validate_config(cfg)

    def test_unknown_top_level_field(self):
        cfg = default_config("solve")
        cfg["extras"] = 1
        with pytest.raises(ConfigInvalid, match="extras"):
            validate_config(cfg)

    def test_unknown_solver_field(self):
        cfg = default_config("solve")
        cfg["solver"]["momentum"] = 0.9
        with pytest.raises(ConfigInvalid, match=r"solver\.momentum"):
            validate_config(cfg)

    def test_task_conflict(self):
        cfg = default_config("solve")
        with pytest.raises(ConfigInvalid, match="subcommand"):
            validate_config(cfg, task="morse")

    def test_bad_task_value(self):
        cfg = default_config("solve")
        cfg["task"] = "meditate"
        with pytest.raises(ConfigInvalid, match="meditate"):
            validate_config(cfg)

    def test_annulus_radii_ordering(self):
        cfg = default_config("multiplicity")
        cfg["domain"]["params"] = {"R": 0.3, "r": 0.4}
        with pytest.raises(ConfigInvalid, match="must be < R"):
            validate_config(cfg)

    def test_alpha_range(self):
        cfg = default_config("solve")
        cfg["model"]["alpha"] = 1.5
        with pytest.raises(ConfigInvalid, match=r"model\.alpha"):
            validate_config(cfg)

    def test_exponent_bounds(self):
        cfg = default_config("solve")
        cfg["model"]["p"] = 1.0
        with pytest.raises(ConfigInvalid, match=r"model\.p"):
            validate_config(cfg)
        cfg = default_config("solve")
        cfg["model"]["theta"] = 2.0
        with pytest.raises(ConfigInvalid, match=r"model\.theta"):
            validate_config(cfg)

    def test_shape_params_exact_keys(self):
        cfg = default_config("solve")
        cfg["domain"]["params"] = {"R": 1.0, "bogus": 2.0}
        with pytest.raises(ConfigInvalid, match="bogus"):
            validate_config(cfg)

    def test_sweep_preconditions(self):
        cfg = default_config("sweep-lambda")
        cfg["sweep"]["lambdas"] = [2.0]
        with pytest.raises(ConfigInvalid, match=r"sweep\.lambdas"):
            validate_config(cfg)
        cfg = default_config("sweep-lambda")
        cfg["sweep"]["radii"] = [1.0, 2.0]
        with pytest.raises(ConfigInvalid, match=r"sweep\.radii"):
            validate_config(cfg)
        cfg = default_config("sweep-lambda")
        del cfg["sweep"]
        with pytest.raises(ConfigInvalid, match='"sweep"'):
            validate_config(cfg)

    def test_sweep_section_rejected_elsewhere(self):
        cfg = default_config("solve")
        cfg["sweep"] = {"lambdas": [2.0, 4.0], "radii": [1.0, 2.0, 4.0]}
        with pytest.raises(ConfigInvalid, match="only valid for task sweep-lambda"):
            validate_config(cfg)

    def test_multiplicity_needs_annulus(self):
        cfg = default_config("multiplicity")
        cfg["domain"] = default_config("solve")["domain"]
        with pytest.raises(ConfigInvalid, match="annulus"):
            validate_config(cfg)

    def test_root_must_be_object(self):
        with pytest.raises(ConfigInvalid, match="object"):
            validate_config([1, 2, 3])


class TestLoadConfig:
    def test_none_path_gives_defaults(self):
        rc = load_config(None, task="solve", seed=None)
        assert rc.task == "solve"
        assert rc.shape == "disk"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalid, match="does not exist"):
            load_config(str(tmp_path / "nope.json"), task="solve", seed=None)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigInvalid, match="not valid JSON"):
            load_config(str(path), task="solve", seed=None)

    def test_seed_override_changes_hash(self):
        base = load_config(None, task="solve", seed=None)
        seeded = load_config(None, task="solve", seed=7)
        assert seeded.rng_seed == 7
        assert seeded.canonical["solver"]["rng_seed"] == 7
        assert seeded.config_hash != base.config_hash

    def test_hash_is_sha256_of_canonical_json(self):
        rc = load_config(None, task="solve", seed=None)
        blob = canonical_json(rc.canonical).encode()
        assert rc.config_hash == hashlib.sha256(blob).hexdigest()

    def test_canonical_json_is_key_sorted_and_newline_terminated(self):
        text = canonical_json({"b": 1, "a": {"d": 2, "c": 3}})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")


class TestWorkerResolution:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("FRACFIELD_WORKERS", "8")
        assert resolve_workers(3) == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("FRACFIELD_WORKERS", "5")
        assert resolve_workers(None) == 5

    def test_garbage_env_means_one(self, monkeypatch):
        monkeypatch.setenv("FRACFIELD_WORKERS", "lots")
        assert resolve_workers(None) == 1

    def test_default_one(self, monkeypatch):
        monkeypatch.delenv("FRACFIELD_WORKERS", raising=False)
        assert resolve_workers(None) == 1


class TestExitCodes:
    def test_config_error_exits_2_and_names_field(self, tmp_path, capsys):
        cfg = default_config("solve")
        del cfg["model"]["alpha"]
        path = write_config(tmp_path, cfg)
        code = main(["solve", "--config", path, "--out", str(tmp_path / "o"), "--quiet"])
        assert code == 2
        assert "alpha" in capsys.readouterr().err

    def test_task_failure_exits_3(self, tmp_path, capsys):
        # h too coarse for the unit disk: the mask keeps too few nodes
        cfg = small_solve_config()
        cfg["domain"]["h"] = 0.45
        path = write_config(tmp_path, cfg)
        code = main(["solve", "--config", path, "--out", str(tmp_path / "o"), "--quiet"])
        assert code == 3
        assert "task error" in capsys.readouterr().err

    def test_report_with_nothing_exits_3(self, tmp_path, capsys):
        code = main(["report", "--out", str(tmp_path / "empty"), "--quiet"])
        assert code == 3
        assert "nothing to report" in capsys.readouterr().err

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "fracfield", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "solve" in proc.stdout and "multiplicity" in proc.stdout

    def test_unknown_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["transcend"])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("vx")
    assert main(["verify-extension", "--out", str(out), "--quiet"]) == 0
    return out


@pytest.fixture(scope="module")
def solve_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    cfg = small_solve_config()
    cfg["output"] = {"dump_fields": True}
    path = write_config(tmp, cfg)
    out = tmp / "out"
    assert main(["solve", "--config", path, "--out", str(out), "--quiet"]) == 0
    return out


@pytest.fixture(scope="module")
def multi_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("multi")
    assert main(["multiplicity", "--out", str(out), "--quiet"]) == 0
    return out


class TestVerifyExtensionOutputs:
    def test_csv_row_for_alpha_half_mu_one(self, out_dir):
        lines = (out_dir / "verify-extension.csv").read_text().splitlines()
        assert lines[0].startswith("# schema_version ")
        assert lines[1].startswith("# config_hash ")
        header = lines[2].split(",")
        assert header == ["alpha", "mu", "ratio", "passed", "abs_rel_err"]
        target = None
        for line in lines[3:]:
            cells = line.split(",")
            if float(cells[0]) == 0.5 and float(cells[1]) == 1.0:
                target = cells
        assert target is not None
        assert target[2] == "1.0000"
        assert target[3] == "1"
        assert float(target[4]) < 1e-5

    def test_json_closed_form_checks(self, out_dir):
        doc = json.loads((out_dir / "verify-extension.json").read_text())
        res = doc["results"]
        assert res["all_passed"] is True
        assert res["psi_sup_error_alpha_half"] <= 1e-8
        assert res["flux_limit_rel_error_alpha_half"] <= 1e-6
        assert len(res["rows"]) == 6

    def test_json_carries_schema_and_hash(self, out_dir):
        doc = json.loads((out_dir / "verify-extension.json").read_text())
        assert doc["schema_version"] == 1
        assert len(doc["config_hash"]) == 64
        assert doc["config"]["task"] == "verify-extension"


class TestSolveOutputs:
    def test_solve_json_record(self, solve_out):
        doc = json.loads((solve_out / "solve.json").read_text())
        res = doc["results"]
        assert res["best"]["converged"] is True
        assert res["best"]["positive"] is True
        assert res["level"] > 0.0
        assert res["n_converged"] >= 1
        assert doc["config_hash"] == doc["config_hash"].lower()

    def test_solve_csv_header(self, solve_out):
        lines = (solve_out / "solve.csv").read_text().splitlines()
        assert lines[2].split(",") == [
            "lambda", "level", "residual", "iterations",
            "barycenter_x", "barycenter_y", "morse_index",
        ]
        assert len(lines) > 3

    def test_field_dump_round_trip(self, solve_out):
        flat = np.loadtxt(solve_out / "solution.txt")
        nx, ny, h = int(flat[0]), int(flat[1]), flat[2]
        vals = flat[3:]
        assert vals.size == nx * ny
        grid = vals.reshape(ny, nx)
        assert grid.max() > 0.0
        assert h == pytest.approx(0.15)
        # zero outside the mask, so the border rows stay empty
        assert np.all(grid[0] == 0.0) and np.all(grid[-1] == 0.0)

    def test_rerun_is_byte_identical(self, solve_out, tmp_path):
        cfg = small_solve_config()
        cfg["output"] = {"dump_fields": True}
        path = write_config(tmp_path, cfg)
        out2 = tmp_path / "out2"
        assert main(["solve", "--config", path, "--out", str(out2), "--quiet"]) == 0
        first = (solve_out / "solve.json").read_bytes()
        second = (out2 / "solve.json").read_bytes()
        assert hashlib.sha256(first).hexdigest() == hashlib.sha256(second).hexdigest()

    def test_seed_flag_changes_stamped_config(self, tmp_path):
        cfg = small_solve_config()
        path = write_config(tmp_path, cfg)
        out = tmp_path / "seeded"
        assert main(["solve", "--config", path, "--out", str(out),
                     "--seed", "3", "--quiet"]) == 0
        doc = json.loads((out / "solve.json").read_text())
        assert doc["config"]["solver"]["rng_seed"] == 3


class TestMultiplicityAndReport:
    def test_class_structure(self, multi_out):
        res = json.loads((multi_out / "multiplicity.json").read_text())["results"]
        assert res["n_classes"] == 2
        assert res["ball_level"] > 0.0
        for cl in res["classes"]:
            assert cl["below_ball_level"] is True
            assert cl["beta_in_plus"] is True
            assert cl["record"]["morse_index"] == 1
        assert res["band_saddle"]["record"]["morse_index"] == 2
        assert res["census"]["matches"] is True

    def test_multiplicity_csv_header(self, multi_out):
        lines = (multi_out / "multiplicity.csv").read_text().splitlines()
        assert lines[2].split(",") == [
            "id", "energy", "bary_x", "bary_y", "morse_index",
            "orbit_size", "below_ball_level",
        ]

    def test_report_aggregates(self, multi_out):
        assert main(["report", "--out", str(multi_out), "--quiet"]) == 0
        doc = json.loads((multi_out / "report.json").read_text())
        assert doc["results"]["tasks"] == ["multiplicity"]
        assert doc["results"]["summary"]["multiplicity"]["census_matches"] is True
        md = (multi_out / "report.md").read_text()
        assert "multiplicity" in md


class TestJsonHygiene:
    def test_no_timestamps_anywhere(self, tmp_path):
        out = tmp_path / "o"
        assert main(["verify-extension", "--out", str(out), "--quiet"]) == 0
        doc = json.loads((out / "verify-extension.json").read_text())

        def walk(node):
            if isinstance(node, dict):
                for k, v in node.items():
                    assert "time" not in k.lower()
                    assert "date" not in k.lower()
                    walk(v)
            elif isinstance(node, list):
                for v in node:
                    walk(v)

        walk(doc)

    def test_results_json_round_trips_canonically(self, tmp_path):
        out = tmp_path / "o"
        assert main(["verify-extension", "--out", str(out), "--quiet"]) == 0
        text = (out / "verify-extension.json").read_text()
        assert canonical_json(json.loads(text)) == text

    def test_default_config_deep_copies(self):
        a = default_config("solve")
        b = default_config("solve")
        a["domain"]["h"] = 99.0
        assert b["domain"]["h"] != 99.0
        c = copy.deepcopy(b)
        validate_config(b)
        assert b == c  # validation must not mutate its input
