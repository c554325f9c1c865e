import json

import pytest

from privpack.errors import InstanceFormatError
from privpack.experiment import CSV_COLUMNS, ExperimentConfig, run_experiment


def small_config(**overrides):
    base = dict(
        solver="dmw",
        kind="uniform",
        n=[12],
        m=[2],
        ell=[2],
        b=[4, 5],
        eps=[10.0],
        delta=[1e-5],
        alpha=[0.3],
        seeds=[1, 2, 3],
        t_override=200,
        output="",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_grid_validation(self):
        with pytest.raises(InstanceFormatError, match="non-empty"):
            small_config(b=[])

    def test_distinct_seeds(self):
        with pytest.raises(InstanceFormatError, match="distinct"):
            small_config(seeds=[1, 1])

    def test_unknown_solver(self):
        with pytest.raises(InstanceFormatError, match="unknown solver"):
            small_config(solver="magic")

    def test_from_json_scalars_promoted(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "solver": "noiseless", "n": 10, "m": 2, "ell": 2, "b": 4,
            "eps": 1.0, "delta": 0.0, "alpha": 0.2, "seeds": [5],
            "t_override": 50, "output": "",
        }))
        config = ExperimentConfig.from_json(path)
        assert config.n == (10,)

    def test_from_json_unknown_field(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"solver": "dmw", "bogus": 1}))
        with pytest.raises(InstanceFormatError, match="bogus"):
            ExperimentConfig.from_json(path)


class TestSweep:
    def test_row_count_and_order(self):
        # 2 x 2 grid x 3 seeds = 12 rows, grid-product then seed order
        rows = run_experiment(small_config(eps=[10.0, 12.0]), output="")
        assert len(rows) == 12
        assert [r["b"] for r in rows] == [4] * 6 + [5] * 6
        assert [r["eps"] for r in rows] == [10.0, 10.0, 10.0, 12.0, 12.0, 12.0] * 2
        assert [r["seed"] for r in rows] == [1, 2, 3] * 4
        assert all(r["status"] == "ok" for r in rows)

    def test_rerun_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        config = small_config()
        run_experiment(config, output=str(p1))
        run_experiment(config, output=str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_guard_failures_recorded_not_raised(self):
        # supply far below the positivity guard: rows carry the guard status
        config = small_config(eps=[0.5], b=[1], seeds=[1])
        rows = run_experiment(config, output="")
        assert len(rows) == 1
        assert rows[0]["status"] == "param_guard"
        assert "step size" in rows[0]["error"]

    def test_reference_gap_column(self):
        config = small_config(reference="brute", seeds=[1])
        rows = run_experiment(config, output="")
        for row in rows:
            assert row["opt_reference"] != ""
            assert row["gap"] == pytest.approx(row["opt_reference"] - row["objective"])

    def test_noiseless_reference_uses_override_rounds(self):
        config = small_config(reference="noiseless", seeds=[2])
        rows = run_experiment(config, output="")
        assert all(row["gap"] != "" for row in rows)

    def test_csv_columns_fixed(self, tmp_path):
        path = tmp_path / "out.csv"
        run_experiment(small_config(seeds=[1]), output=str(path))
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_parallel_rows_match_sequential(self):
        import dataclasses

        config = small_config()
        seq = run_experiment(config, output="")
        par = run_experiment(dataclasses.replace(config, workers=2), output="")
        assert seq == par

    def test_domw_online_solver_matches_batch(self):
        base = dict(
            kind="uniform", n=[30], m=[2], ell=[2], b=[8], eps=[0.1],
            delta=[0.0], alpha=[0.2], seeds=[4], output="",
        )
        batch = run_experiment(ExperimentConfig(solver="domw", **base), output="")
        online = run_experiment(ExperimentConfig(solver="domw-online", **base), output="")
        assert batch[0]["objective"] == online[0]["objective"]
        assert batch[0]["feasible"] == online[0]["feasible"]

    def test_brute_solver_rows(self):
        config = small_config(solver="brute", n=[5], seeds=[1])
        rows = run_experiment(config, output="")
        assert rows[0]["status"] == "ok"
        assert rows[0]["objective"] != ""
