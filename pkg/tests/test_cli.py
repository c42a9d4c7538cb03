"""CLI contract tests: exit codes, outputs, determinism."""

import json

import pytest

from ccesim.cli import cli_main
from ccesim.tables import verify_manifest


@pytest.fixture(autouse=True)
def pinned_timestamp(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1754600000")


def write(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


SMALL_RUN = """
[population]
n = 40
m = 3
steps = 6
seed = 11
initial_adopters = [[1, "complement", 0.2], [2, "substitute", 0.2]]
"""

SMALL_EXPERIMENT = """
[population]
n = 40
steps = 6
[batch]
repetitions = 3
master_seed = 21
crossover = ["complement", "substitute"]
[[batch.sweep]]
path = "initial_adopters"
values = [
    [[-1, "complement", 0.1]],
    [[-1, "substitute", 0.1]],
]
labels = ["complement", "substitute"]
name = "arm"
"""

SMALL_FIELD = """
experiment = "fig5"
[population]
n = 50
[replicator]
grid_resolution = 3
replicates = 8
warmup_steps = 1
t_max = 2.0
dt = 0.1
starts = [[0.6, 0.2, 0.2]]
"""


class TestValidate:
    def test_good_config_exit_zero(self, tmp_path, capsys):
        assert cli_main(["validate", "--config", write(tmp_path, SMALL_RUN)]) == 0
        assert "config ok" in capsys.readouterr().err

    def test_bad_config_exit_two_no_files(self, tmp_path, capsys):
        cfg = write(tmp_path, "[population]\nn = 1\n")
        out = tmp_path / "out"
        code = cli_main(["validate", "--config", cfg, "--out", str(out)])
        assert code == 2
        assert not out.exists()
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_exit_two(self, tmp_path):
        assert cli_main(["validate", "--config", str(tmp_path / "nope.toml")]) == 2


class TestRun:
    def test_run_writes_step_records_and_manifest(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        assert cli_main(["run", "--config", cfg, "--out", str(out), "--seed", "42"]) == 0
        manifest = verify_manifest(out)
        assert manifest["master_seed"] == 42
        # 7 records x (population + 3 groups) rows
        assert manifest["outputs"][0]["rows"] == 7 * 4

    def test_run_twice_identical_bytes(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli_main(["run", "--config", cfg, "--out", str(out_a), "--seed", "42"]) == 0
        assert cli_main(["run", "--config", cfg, "--out", str(out_b), "--seed", "42"]) == 0
        assert (out_a / "step_records.csv").read_bytes() == (out_b / "step_records.csv").read_bytes()
        assert (out_a / "manifest.json").read_bytes() == (out_b / "manifest.json").read_bytes()

    def test_runtime_error_exit_one(self, tmp_path):
        cfg = write(tmp_path, SMALL_RUN)
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not a directory")
        code = cli_main(["run", "--config", cfg, "--out", str(blocker / "sub")])
        assert code == 1


class TestExperiment:
    def test_outputs_and_analysis(self, tmp_path):
        cfg = write(tmp_path, SMALL_EXPERIMENT)
        out = tmp_path / "out"
        assert cli_main(["experiment", "--config", cfg, "--out", str(out)]) == 0
        manifest = verify_manifest(out)
        names = {entry["path"] for entry in manifest["outputs"]}
        assert names == {"aggregates.csv", "summary.csv"}
        assert "crossover" in manifest["analysis"]
        header = (out / "aggregates.csv").read_text().splitlines()[0]
        assert header.startswith("arm,step,")

    def test_threads_do_not_change_output_bytes(self, tmp_path):
        cfg = write(tmp_path, SMALL_EXPERIMENT)
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        assert cli_main(["experiment", "--config", cfg, "--out", str(out1), "--threads", "1"]) == 0
        assert cli_main(["experiment", "--config", cfg, "--out", str(out2), "--threads", "2"]) == 0
        for name in ("aggregates.csv", "summary.csv", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_budget_override_exit_two(self, tmp_path):
        cfg = write(tmp_path, SMALL_EXPERIMENT)
        assert cli_main(["experiment", "--config", cfg, "--budget", "2"]) == 2


class TestFieldAndTrajectory:
    def test_field_row_count_matches_grid(self, tmp_path):
        cfg = write(tmp_path, SMALL_FIELD)
        out = tmp_path / "out"
        assert cli_main(["field", "--config", cfg, "--out", str(out)]) == 0
        manifest = verify_manifest(out)
        # C(3+2, 2) = 10 grid points
        assert manifest["outputs"][0]["rows"] == 10

    def test_trajectory_rows_and_terminals(self, tmp_path):
        cfg = write(tmp_path, SMALL_FIELD)
        out = tmp_path / "out"
        assert cli_main(["trajectory", "--config", cfg, "--out", str(out)]) == 0
        manifest = verify_manifest(out)
        assert manifest["outputs"][0]["schema"] == "trajectories"
        assert len(manifest["analysis"]["terminals"]) == 1

    def test_seed_override_changes_field(self, tmp_path):
        cfg = write(tmp_path, SMALL_FIELD)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert cli_main(["field", "--config", cfg, "--out", str(out1), "--seed", "1"]) == 0
        assert cli_main(["field", "--config", cfg, "--out", str(out2), "--seed", "2"]) == 0
        assert (out1 / "field_samples.csv").read_bytes() != (out2 / "field_samples.csv").read_bytes()
