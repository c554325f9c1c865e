import json
import subprocess
import sys

import pytest

import privpack as pp
from privpack.generators import generate_instance, generate_workload
from privpack.hardness import save_workload


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "privpack.cli", *args],
        capture_output=True,
        text=True,
    )


@pytest.fixture
def instance_file(tmp_path):
    inst = generate_instance("uniform", 12, 2, 2, 5.0, seed=3)
    path = tmp_path / "inst.json"
    pp.save_instance(inst, path)
    return str(path)


@pytest.fixture
def tiny_instance_file(tmp_path):
    inst = generate_instance("uniform", 4, 2, 2, 2.0, seed=9)
    path = tmp_path / "tiny.json"
    pp.save_instance(inst, path)
    return str(path)


class TestSolve:
    def test_dmw_report_json(self, instance_file):
        proc = run_cli(
            "solve", "--instance", instance_file, "--solver", "dmw",
            "--eps", "10", "--delta", "1e-5", "--alpha", "0.3",
            "--seed", "7", "--t-override", "200",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["solver"] == "dmw"
        assert doc["status"] == "ok"
        assert "wall_time_ms" not in doc

    def test_hex_seed_accepted(self, instance_file):
        proc = run_cli(
            "solve", "--instance", instance_file, "--solver", "noiseless",
            "--alpha", "0.1", "--seed", "0xDEADBEEF", "--t-override", "40",
        )
        assert proc.returncode == 0, proc.stderr

    def test_byte_identical_reruns(self, instance_file, tmp_path):
        outputs = []
        for run in range(2):
            alloc_path = tmp_path / f"alloc{run}.json"
            proc = run_cli(
                "solve", "--instance", instance_file, "--solver", "dmw",
                "--eps", "10", "--delta", "1e-5", "--alpha", "0.3",
                "--seed", "11", "--t-override", "200",
                "--save-allocation", str(alloc_path),
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append((proc.stdout, alloc_path.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_timing_flag_adds_wall_time(self, instance_file):
        proc = run_cli(
            "solve", "--instance", instance_file, "--solver", "noiseless",
            "--alpha", "0.1", "--t-override", "40", "--timing",
        )
        assert "wall_time_ms" in json.loads(proc.stdout)

    def test_validation_error_exit_one(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        proc = run_cli("solve", "--instance", str(path), "--solver", "brute")
        assert proc.returncode == 1
        assert proc.stderr.startswith("error: ")
        parsed = json.loads(proc.stderr.split("error: ", 1)[1])
        assert parsed["type"] == "validation"

    def test_guard_error_exit_two(self, instance_file):
        proc = run_cli(
            "solve", "--instance", instance_file, "--solver", "dmw",
            "--eps", "0.1", "--delta", "1e-6", "--alpha", "0.2",
            "--t-override", "50",
        )
        assert proc.returncode == 2
        assert "error: " in proc.stderr

    def test_missing_privacy_flags_rejected(self, instance_file):
        proc = run_cli("solve", "--instance", instance_file, "--solver", "dmw")
        assert proc.returncode == 1


class TestOracle:
    def test_opt_value_line(self, tiny_instance_file):
        proc = run_cli("oracle", "--instance", tiny_instance_file)
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        inst = pp.load_instance(tiny_instance_file)
        assert doc["opt_value"] == pytest.approx(pp.brute_force_opt(inst).opt_value)
        assert doc["method"] == "brute"


class TestAudit:
    def test_mechanism_and_concentration(self):
        proc = run_cli(
            "audit", "--what", "all", "--eps-step", "1", "--trials", "20000",
            "--rounds", "100", "--m", "3", "--p-max", "4", "--seed", "5",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["mechanism"]["epsilon_hat"] <= 1.5
        assert doc["adaptive_sum"]["violation_rate"] <= 0.05
        assert doc["overflow"]["violation_rate"] <= 0.05

    def test_scale_zero_control(self):
        proc = run_cli(
            "audit", "--what", "mechanism", "--scale-zero", "--trials", "5000",
        )
        doc = json.loads(proc.stdout)
        assert doc["mechanism"]["non_private"] is True
        assert doc["mechanism"]["epsilon_hat"] == "inf"


class TestReduce:
    def test_end_to_end(self, tmp_path):
        w = generate_workload(8, 2, seed=2)
        path = tmp_path / "w.json"
        save_workload(w, path)
        proc = run_cli(
            "reduce", "--workload", str(path), "--b", "8",
            "--solver", "noiseless", "--alpha", "0.02",
            "--t-override", "20000",
        )
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert len(doc["released"]) == 2
        assert doc["average_error"] <= 2.0
        assert doc["objective"] >= doc["opt_lower_bound"] - 0.6


class TestSweep:
    def test_sweep_writes_csv(self, tmp_path):
        config = {
            "solver": "noiseless", "kind": "uniform", "n": [10], "m": [2],
            "ell": [2], "b": [4], "eps": [1.0], "delta": [0.0],
            "alpha": [0.2], "seeds": [1, 2], "t_override": 50,
            "output": str(tmp_path / "rows.csv"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        proc = run_cli("sweep", "--config", str(cfg_path))
        assert proc.returncode == 0, proc.stderr
        summary = json.loads(proc.stdout)
        assert summary["rows"] == 2 and summary["failures"] == 0
        lines = (tmp_path / "rows.csv").read_text().splitlines()
        assert len(lines) == 3
