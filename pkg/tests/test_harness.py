import json
import math

import numpy as np
import pytest

from symrc import harness, tasks
from symrc.errors import ConfigurationError, ParameterError
from symrc.harness import (
    DataSpec,
    ExperimentRecord,
    InferenceExperimentSpec,
    ParityExperimentSpec,
    SweepSpec,
    derive_instance_seeds,
    experiment_spec_from_config,
    fit_scaling,
    load_config,
    read_records,
    rerun_record,
    resolve_workers,
    run_experiment,
    run_sweep,
    sweep_spec_from_config,
    write_records,
)

FAST_PARITY = dict(
    scheme="parallel",
    n=2,
    n_nodes=2,
    instances=2,
    budget=10,
    seed=42,
    train=DataSpec("minimal"),
    test=DataSpec("exhaustive"),
)

INFERENCE_HP = dict(gamma=14.0, rho_r=0.9, rho_in=0.3, sigma=0.5)


class TestWorkers:
    def test_env_override(self, monkeypatch):
        monkeypatch.setenv(harness.WORKERS_ENV_VAR, "3")
        assert resolve_workers(8) == 3

    def test_request_without_env(self, monkeypatch):
        monkeypatch.delenv(harness.WORKERS_ENV_VAR, raising=False)
        assert resolve_workers(2) == 2

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv(harness.WORKERS_ENV_VAR, "lots")
        with pytest.raises(ConfigurationError):
            resolve_workers()


class TestSeeding:
    def test_reproducible_and_distinct(self):
        a = derive_instance_seeds(7, 5)
        b = derive_instance_seeds(7, 5)
        assert a == b
        assert len({s for pair in a for s in pair}) == 10


class TestRunExperiment:
    def test_parity_records(self, tmp_path):
        spec = ParityExperimentSpec(**FAST_PARITY)
        records = run_experiment(spec, output_dir=tmp_path, workers=1)
        assert len(records) == 2
        for rec in records:
            assert rec.error is None
            assert rec.metric_name == "ber"
            assert rec.task == "parity-parallel"
            assert rec.symmetry["eta_r"] == 1.0  # matched to even order
        assert (tmp_path / "records.jsonl").exists()
        saved = read_records(tmp_path / "records.jsonl")
        assert [r.experiment_id for r in saved] == [r.experiment_id for r in records]
        raws = list((tmp_path / "raw").glob("*.tsv"))
        assert len(raws) == 2
        header = raws[0].read_text().splitlines()[0]
        assert header == "word_index\ttruth\tpredicted"

    def test_round_trip_rerun_bit_identical(self, tmp_path):
        spec = ParityExperimentSpec(**FAST_PARITY)
        records = run_experiment(spec, output_dir=tmp_path, workers=1)
        for rec in read_records(tmp_path / "records.jsonl"):
            assert rerun_record(rec) == rec.metric_value

    def test_inference_round_trip(self):
        spec = InferenceExperimentSpec(
            duration=10.0, n_nodes=20, instances=1, seed=3,
            eta_r=1.0, optimize=False, hyperparams=INFERENCE_HP,
        )
        rec = run_experiment(spec, workers=1)[0]
        assert rec.error is None
        assert rec.metric_name == "nrmse"
        assert rerun_record(rec) == rec.metric_value

    def test_parallel_workers_match_serial_execution(self):
        spec = ParityExperimentSpec(**FAST_PARITY)
        serial = run_experiment(spec, workers=1)
        parallel = run_experiment(spec, workers=2)
        assert [r.metric_value for r in serial] == [r.metric_value for r in parallel]

    def test_coverage_enforced_data(self):
        spec = ParityExperimentSpec(
            scheme="serial", n=3, n_nodes=10, instances=1, budget=10, seed=1,
            train=DataSpec("random", 60), test=DataSpec("random", 60),
            require_coverage=True, optimize=False,
            hyperparams=dict(gamma=2.0, rho_r=0.9, rho_in=0.5, sigma=0.9,
                             t0=0.3, delta_t=0.5),
        )
        rec = run_experiment(spec, workers=1)[0]
        for role in ("train", "test"):
            series = tasks.random_bits(
                rec.data[role]["length"], rec.data[role]["seed"]
            )
            assert tasks.coverage_check(series, 3)[0]

    def test_instance_error_is_recorded_not_raised(self):
        # an unmeasurable window raises inside the pipeline; the record
        # captures it and the batch completes
        spec = ParityExperimentSpec(
            scheme="parallel", n=2, n_nodes=2, instances=2, seed=0,
            optimize=False,
            hyperparams=dict(gamma=2.0, rho_r=1.0, rho_in=0.5, sigma=0.9,
                             t0=0.96, delta_t=0.03),
            train=DataSpec("minimal"), test=DataSpec("exhaustive"),
        )
        records = run_experiment(spec, workers=1)
        assert len(records) == 2
        for rec in records:
            assert rec.error is not None and "window" in rec.error
            assert math.isnan(rec.metric_value)


class TestSweep:
    def test_stop_rule_and_aggregates(self):
        spec = SweepSpec(
            scheme="parallel", n_values=(2,), n_nodes_values=(1, 2, 3, 4),
            instances=3, budget=10, seed=9,
        )
        result = run_sweep(spec, workers=1)
        # order-2 with the matched readout is solved at N = 1 by every
        # instance, so the stop rule fires immediately
        assert [c.n_nodes for c in result.cells] == [1]
        assert result.cells[0].all_zero
        assert result.smallest_any_zero() == {2: 1}
        assert result.smallest_all_zero() == {2: 1}

    def test_aggregation_matches_independent_recomputation(self):
        spec = SweepSpec(
            scheme="parallel", n_values=(2, 3), n_nodes_values=(1,),
            instances=4, budget=10, seed=5, stop_on_all_zero=False,
        )
        result = run_sweep(spec, workers=1)
        assert len(result.cells) == 2
        for cell in result.cells:
            values = sorted(
                r.metric_value for r in result.records
                if r.n == cell.n and r.n_nodes == cell.n_nodes
            )
            stats = cell.stats()
            assert stats["mean"] == pytest.approx(np.mean(values))
            assert stats["min"] == values[0] and stats["max"] == values[-1]
            assert stats["q1"] == pytest.approx(np.percentile(values, 25))
            assert stats["q3"] == pytest.approx(np.percentile(values, 75))

    def test_table_output(self, tmp_path):
        spec = SweepSpec(
            scheme="parallel", n_values=(2,), n_nodes_values=(1,),
            instances=2, budget=10, seed=1,
        )
        result = run_sweep(spec, output_dir=tmp_path, workers=1)
        table = (tmp_path / "sweep_table.tsv").read_text()
        assert table.splitlines()[0].split("\t") == list(harness._TABLE_COLUMNS)
        assert len(table.splitlines()) == len(result.cells) + 1
        assert (tmp_path / "records.jsonl").exists()


class TestFitScaling:
    def test_exact_line(self):
        pts = [(n, 2 * n + 1) for n in range(2, 8)]
        fit = fit_scaling(pts, "linear")
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_exact_exponential(self):
        pts = [(n, 2.0 * 2.0**n) for n in range(1, 6)]
        fit = fit_scaling(pts, "exponential")
        assert fit.slope == pytest.approx(math.log(2.0))
        assert fit.r_squared == pytest.approx(1.0)

    def test_reported_small_order_scaling_slope(self):
        # smallest zero-error sizes implied by the reported fit
        # N = 0.50 n + 0.22 over n = 2..7, rounded to integers
        pts = [(n, round(0.50 * n + 0.22)) for n in range(2, 8)]
        fit = fit_scaling(pts, "linear")
        assert 0.3 < fit.slope < 0.7

    def test_too_few_points(self):
        with pytest.raises(ParameterError):
            fit_scaling([(1, 1), (2, 2)], "linear")


class TestRecordsIO:
    def test_jsonl_round_trip(self, tmp_path):
        spec = ParityExperimentSpec(**FAST_PARITY)
        records = run_experiment(spec, workers=1)
        path = tmp_path / "records.jsonl"
        write_records(records, path)
        loaded = read_records(path)
        assert [r.to_dict() for r in loaded] == [r.to_dict() for r in records]
        # the file is valid JSON lines
        for line in path.read_text().splitlines():
            json.loads(line)


CONFIG_TEXT = """
[experiment]
task = parity-parallel
seed = 13
instances = 2
budget = 10

[parity]
n = 2
n_nodes = 2
train = minimal
test = exhaustive
"""


class TestConfigFiles:
    def test_load_and_run(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(CONFIG_TEXT)
        spec = experiment_spec_from_config(load_config(path))
        assert isinstance(spec, ParityExperimentSpec)
        assert spec.n == 2 and spec.seed == 13
        records = run_experiment(path, workers=1)
        assert len(records) == 2

    def test_missing_key_is_named(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[experiment]\ntask = parity-serial\n\n[parity]\nn_nodes = 5\n")
        with pytest.raises(ConfigurationError, match="'n'"):
            experiment_spec_from_config(load_config(path))

    def test_bad_value_is_named(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(
            "[experiment]\ntask = parity-serial\n\n[parity]\nn = six\nn_nodes = 5\n"
        )
        with pytest.raises(ConfigurationError, match="'n'"):
            experiment_spec_from_config(load_config(path))

    def test_unknown_task(self):
        with pytest.raises(ConfigurationError, match="task"):
            experiment_spec_from_config({"experiment": {"task": "basketball"}})

    def test_sweep_config(self, tmp_path):
        path = tmp_path / "sweep.ini"
        path.write_text(
            "[experiment]\ntask = parity-parallel\nseed = 3\ninstances = 2\n"
            "budget = 10\n\n[sweep]\nn_values = 2, 3\nn_nodes_values = 1, 2\n"
        )
        spec = sweep_spec_from_config(load_config(path))
        assert spec.n_values == (2, 3)
        assert spec.n_nodes_values == (1, 2)

    def test_missing_config_file(self):
        with pytest.raises(ConfigurationError):
            load_config("/nonexistent/path.ini")
