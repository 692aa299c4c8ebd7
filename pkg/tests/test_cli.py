import json

import pytest
from click.testing import CliRunner

from symrc.cli import main


@pytest.fixture
def runner():
    return CliRunner()


PARITY_CONFIG = """
[experiment]
task = parity-parallel
seed = 42
instances = 2
budget = 10

[parity]
n = 2
n_nodes = 2
train = minimal
test = exhaustive
"""

INFER_CONFIG = """
[experiment]
task = inference
seed = 3
instances = 1
optimize = false

[inference]
duration = 10
n_nodes = 20
eta_r = 1.0

[hyperparams]
gamma = 14.0
rho_r = 0.9
rho_in = 0.3
sigma = 0.5
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestExperimentCommands:
    def test_parity_parallel_with_outputs(self, runner, tmp_path):
        cfg = write(tmp_path, "exp.ini", PARITY_CONFIG)
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["parity-parallel", "-c", cfg, "-o", str(out), "--workers", "1"],
        )
        assert result.exit_code == 0, result.output
        assert "ber: best = 0" in result.output
        lines = (out / "records.jsonl").read_text().strip().splitlines()
        assert len(lines) == 2
        record = json.loads(lines[0])
        assert record["task"] == "parity-parallel"

    def test_seed_and_budget_overrides(self, runner, tmp_path):
        cfg = write(tmp_path, "exp.ini", PARITY_CONFIG)
        out = tmp_path / "out"
        result = runner.invoke(main, [
            "parity-parallel", "-c", cfg, "-o", str(out),
            "--seed", "7", "--budget", "12", "--workers", "1",
        ])
        assert result.exit_code == 0, result.output
        record = json.loads(
            (out / "records.jsonl").read_text().strip().splitlines()[0]
        )
        assert record["budget"] == 12

    def test_infer_command(self, runner, tmp_path):
        cfg = write(tmp_path, "infer.ini", INFER_CONFIG)
        result = runner.invoke(main, ["infer", "-c", cfg, "--workers", "1"])
        assert result.exit_code == 0, result.output
        assert "nrmse" in result.output

    def test_task_command_mismatch(self, runner, tmp_path):
        cfg = write(tmp_path, "exp.ini", PARITY_CONFIG)
        result = runner.invoke(main, ["parity-serial", "-c", cfg])
        assert result.exit_code != 0
        assert "parity-parallel" in result.output

    def test_malformed_config_nonzero_exit(self, runner, tmp_path):
        cfg = write(
            tmp_path, "bad.ini",
            "[experiment]\ntask = parity-serial\n\n[parity]\nn_nodes = 5\n",
        )
        result = runner.invoke(main, ["parity-serial", "-c", cfg])
        assert result.exit_code != 0
        assert "'n'" in result.output


class TestSweepCommand:
    def test_sweep_writes_table(self, runner, tmp_path):
        cfg = write(tmp_path, "sweep.ini", (
            "[experiment]\ntask = parity-parallel\nseed = 9\ninstances = 2\n"
            "budget = 10\n\n[sweep]\nn_values = 2\nn_nodes_values = 1, 2\n"
        ))
        out = tmp_path / "sweepout"
        result = runner.invoke(
            main, ["sweep", "-c", cfg, "-o", str(out), "--workers", "1"]
        )
        assert result.exit_code == 0, result.output
        table = (out / "sweep_table.tsv").read_text().splitlines()
        assert table[0].startswith("n\tn_nodes")
        assert len(table) == 2  # stop rule fired at N = 1


class TestAnalysisCommands:
    def test_fit_scaling_points(self, runner):
        result = runner.invoke(main, [
            "fit-scaling", "--point", "2", "5", "--point", "3", "7",
            "--point", "4", "9", "--model", "linear",
        ])
        assert result.exit_code == 0, result.output
        assert "slope = 2" in result.output

    def test_fit_scaling_from_sweep_table(self, runner, tmp_path):
        table = tmp_path / "sweep_table.tsv"
        header = "n\tn_nodes\tinstances\tmean\tmin\tq1\tq3\tmax\tzero_fraction\tcomplete"
        rows = [
            "2\t1\t2\t0\t0\t0\t0\t0\t1\ttrue",
            "3\t1\t2\t0.5\t0.5\t0.5\t0.5\t0.5\t0\ttrue",
            "3\t2\t2\t0\t0\t0\t0\t0\t1\ttrue",
            "4\t2\t2\t0\t0\t0\t0\t0\t1\ttrue",
        ]
        table.write_text("\n".join([header] + rows) + "\n")
        result = runner.invoke(
            main, ["fit-scaling", "--from-sweep", str(table)]
        )
        assert result.exit_code == 0, result.output
        assert "slope" in result.output

    def test_fit_scaling_needs_points(self, runner):
        result = runner.invoke(main, ["fit-scaling", "--point", "2", "5"])
        assert result.exit_code != 0

    def test_check_coverage_ok(self, runner):
        result = runner.invoke(main, [
            "check-coverage", "--n", "3", "--length", "200", "--seed", "1",
        ])
        assert result.exit_code == 0, result.output
        assert "all 8 patterns present" in result.output

    def test_check_coverage_failure_exits_nonzero(self, runner, tmp_path):
        bits = tmp_path / "bits.txt"
        bits.write_text("1 1 1 1 1 1\n")
        result = runner.invoke(main, [
            "check-coverage", "--n", "2", "--bits-file", str(bits),
        ])
        assert result.exit_code == 1
        assert "missing" in result.output
