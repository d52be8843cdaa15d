"""Config validation, CLI exit codes, output schemas, determinism."""

import json
import subprocess
import sys

import pytest

from gridsur.cli import main
from gridsur.config import config_hash, load_config, replication_seed
from gridsur.errors import ConfigError


def base_config(**overrides):
    doc = {
        "domain": {
            "extent": [0.0, 1.0],
            "resolution": 21,
            "weights": "uniform",
            "noise": {"mode": "zero"},
        },
        "kernel": {"family": "matern52", "variance": 1.0, "lengthscale": 0.25},
        "functional": {"kind": "ibv", "threshold": 0.6},
        "strategy": {"n_init": 3, "n_steps": 4},
        "replications": 2,
        "seed": 11,
    }
    doc.update(overrides)
    return doc


def write(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestConfigValidation:
    def test_valid_config_loads(self):
        cfg = load_config(base_config())
        assert cfg.domain.size == 21
        assert cfg.functionals[0].kind == "ibv"
        assert cfg.replications == 2

    def test_resolution_bound(self):
        with pytest.raises(ConfigError):
            load_config(base_config(domain={"extent": [0, 1], "resolution": 1}))

    def test_replications_bound(self):
        with pytest.raises(ConfigError):
            load_config(base_config(replications=0))

    def test_ei_needs_zero_noise(self):
        doc = base_config(functional={"kind": "ei"})
        doc["domain"]["noise"] = {"mode": "constant", "value": 0.2}
        with pytest.raises(ConfigError, match="zero-noise"):
            load_config(doc)

    def test_threshold_requirements(self):
        with pytest.raises(ConfigError):
            load_config(base_config(functional={"kind": "vev"}))
        with pytest.raises(ConfigError):
            load_config(base_config(functional={"kind": "kg", "threshold": 1.0}))

    def test_custom_weights_and_noise_lengths(self):
        doc = base_config()
        doc["domain"]["weights"] = [1.0] * 21
        doc["domain"]["noise"] = {"mode": "custom", "values": [0.1] * 21}
        cfg = load_config(doc)
        assert cfg.domain.total_mass == pytest.approx(21.0)
        with pytest.raises(ConfigError):
            doc2 = base_config()
            doc2["domain"]["weights"] = [1.0] * 5
            load_config(doc2)

    def test_epsilon_validation(self):
        doc = base_config()
        doc["strategy"]["epsilon"] = {"kind": "constant", "value": 0.5}
        with pytest.raises(ConfigError):
            load_config(doc)

    def test_candidate_validation(self):
        doc = base_config()
        doc["strategy"]["candidates"] = [0, 25]
        with pytest.raises(ConfigError):
            load_config(doc)

    def test_overrides_change_hash(self):
        doc = base_config()
        h1 = config_hash(doc)
        cfg = load_config(doc, override_seed=99)
        assert cfg.config_hash != h1

    def test_output_dir_excluded_from_hash(self):
        a = base_config(output_dir="x")
        b = base_config(output_dir="y")
        assert config_hash(a) == config_hash(b)

    def test_replication_seeds_distinct_and_stable(self):
        doc = base_config()
        s = [replication_seed(doc, r) for r in range(4)]
        assert len(set(s)) == 4
        assert s == [replication_seed(doc, r) for r in range(4)]


class TestCliRun:
    def test_outputs_and_schema(self, tmp_path):
        cfg_path = write(tmp_path, base_config())
        out = tmp_path / "out"
        assert main(["run", cfg_path, "--out", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["manifest.json", "summary.json", "trace_rep000.csv", "trace_rep001.csv"]
        header = (out / "trace_rep000.csv").read_text().splitlines()[0]
        assert header == "step,selected_index,z,H,J_min,J_selected,epsilon,gain,metric_1,metric_2"
        rows = (out / "trace_rep000.csv").read_text().splitlines()
        assert len(rows) == 1 + 4 + 1  # header + steps + terminal row
        summary = json.loads((out / "summary.json").read_text())
        assert summary["variance_monotonicity"]["violations"] == 0
        assert summary["supermartingale"]["passed"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["replication_seeds"]) == 2

    def test_byte_determinism(self, tmp_path):
        cfg_path = write(tmp_path, base_config())
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", cfg_path, "--out", str(a)]) == 0
        assert main(["run", cfg_path, "--out", str(b)]) == 0
        for name in ("manifest.json", "summary.json", "trace_rep000.csv", "trace_rep001.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_replication_override(self, tmp_path):
        cfg_path = write(tmp_path, base_config())
        out = tmp_path / "r1"
        assert main(["run", cfg_path, "--out", str(out), "--replications", "1"]) == 0
        assert not (out / "trace_rep001.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        doc = base_config(functional={"kind": "ei"})
        doc["domain"]["noise"] = {"mode": "constant", "value": 0.3}
        cfg_path = write(tmp_path, doc)
        assert main(["run", cfg_path, "--out", str(tmp_path / "x")]) == 2

    def test_missing_file_io_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json"), "--out", str(tmp_path)]) == 4

    def test_invalid_json_exit_code(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["run", str(path), "--out", str(tmp_path)]) == 2


class TestCliCompare:
    def test_row_count_and_shared_truth(self, tmp_path):
        doc = base_config()
        doc.pop("functional")
        doc["functionals"] = [
            {"kind": "ibv", "threshold": 0.6},
            {"kind": "vev", "threshold": 0.6},
        ]
        doc["replications"] = 1
        cfg_path = write(tmp_path, doc)
        out = tmp_path / "cmp"
        assert main(["compare", cfg_path, "--out", str(out)]) == 0
        lines = (out / "compare.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * (4 + 1)
        assert lines[0].startswith("functional,replication,step,H")

    def test_excursion_medians_nonincreasing(self, tmp_path):
        import csv
        import numpy as np

        doc = base_config()
        doc.pop("functional")
        doc["functionals"] = [
            {"kind": "ibv", "threshold": 0.5},
            {"kind": "vev", "threshold": 0.5},
        ]
        doc["domain"]["resolution"] = 41
        doc["strategy"]["n_steps"] = 12
        doc["replications"] = 4
        cfg_path = write(tmp_path, doc)
        out = tmp_path / "cmp3"
        assert main(["compare", cfg_path, "--out", str(out)]) == 0
        series = {"ibv": {}, "vev": {}}
        with open(out / "compare.csv") as fh:
            for row in csv.DictReader(fh):
                series[row["functional"]].setdefault(int(row["step"]), []).append(
                    float(row["H"])
                )
        for kind, by_step in series.items():
            med = np.array([np.median(by_step[s]) for s in sorted(by_step)])
            assert np.all(np.diff(med) <= 1e-12), kind

    def test_identical_specs_identical_columns(self, tmp_path):
        doc = base_config()
        doc.pop("functional")
        doc["functionals"] = [
            {"kind": "ibv", "threshold": 0.6},
            {"kind": "ibv", "threshold": 0.6},
        ]
        doc["replications"] = 1
        cfg_path = write(tmp_path, doc)
        out = tmp_path / "cmp2"
        assert main(["compare", cfg_path, "--out", str(out)]) == 0
        lines = (out / "compare.csv").read_text().splitlines()[1:]
        half = len(lines) // 2
        a = [line.split(",", 1)[1] for line in lines[:half]]
        b = [line.split(",", 1)[1] for line in lines[half:]]
        assert a == b


class TestCliCheck:
    def test_check_passes_and_is_seed_pinned(self, tmp_path, capsys):
        cfg_path = write(tmp_path, base_config())
        assert main(["check", cfg_path]) == 0
        first = capsys.readouterr().out
        assert main(["check", cfg_path]) == 0
        assert capsys.readouterr().out == first
        assert "[PASS]" in first and "[FAIL]" not in first

    def test_corrupted_functional_fails(self, tmp_path, capsys):
        cfg_path = write(tmp_path, base_config())
        assert main(["check", cfg_path, "--corrupt-functional"]) == 1
        out = capsys.readouterr().out
        assert "[FAIL] supermartingale" in out

    def test_console_script_entry(self, tmp_path):
        cfg_path = write(tmp_path, base_config())
        proc = subprocess.run(
            [sys.executable, "-m", "gridsur.cli", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
