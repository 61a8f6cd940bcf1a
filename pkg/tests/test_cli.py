"""
Tests for the command-line front end.
"""

import yaml
import pytest
from click.testing import CliRunner

from cli import cli
from simulation import reporting


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_config(tmp_path):
    """A short lossless run written to a YAML file."""
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump({
        "seed": 11,
        "source": {"pair_count": 300},
        "latency": {"kind": "lognormal", "median_s": 0.002},
        "simulation": {"survival_override": 0.5},
        "experiments": {
            "buffer_sweep": {"latencies_s": [0.0, 0.002]},
            "rate_sweep": {"thresholds": [0.81, 0.99]},
            "fidelity_curve": {"points": 11},
        },
    }))
    return path


class TestInformationalCommands:
    """Commands that only print."""

    def test_list_technologies(self, runner):
        """The catalog is printed with its lifetimes."""
        result = runner.invoke(cli, ["list-technologies"])
        assert result.exit_code == 0
        lines = result.output.splitlines()
        for name, t1, t2 in [
            ("Yb171", "12000", "4200"), ("Er167", "600", "1.3"), ("Ca40", "1.14", "0.5"),
            ("NV", "200", "0.5"), ("SC-cavity-A", "0.0256", "0.034"), ("SC-cavity-B", "0.0012", "0.00072"),
        ]:
            line = next(line for line in lines if line.startswith(name + " "))
            assert line.split()[1:3] == [t1, t2]

    @pytest.mark.parametrize("preset", ["desk-scale", "paper-full"])
    def test_validate_preset(self, runner, preset):
        """Shipped presets validate."""
        result = runner.invoke(cli, ["validate-config", "--preset", preset])
        assert result.exit_code == 0
        assert result.output.startswith("ok:")

    def test_validate_needs_input(self, runner):
        """validate-config without a source is a configuration error."""
        result = runner.invoke(cli, ["validate-config"])
        assert result.exit_code == 2
        assert "error[config]" in result.output


class TestErrors:
    """Exit codes by error category."""

    def test_invalid_config(self, runner, tmp_path):
        """Schema violations exit with 2."""
        path = tmp_path / "bad.yaml"
        path.write_text("protocol:\n  fidelity_threshold: 0.3\n")
        result = runner.invoke(cli, ["validate-config", "--config", str(path)])
        assert result.exit_code == 2
        assert "error[config]" in result.output

    def test_missing_file(self, runner, tmp_path):
        """Unreadable files exit with 4."""
        result = runner.invoke(cli, ["run", "--config", str(tmp_path / "absent.yaml")])
        assert result.exit_code == 4
        assert "error[io]" in result.output

    def test_config_and_preset(self, runner, small_config):
        """--config and --preset are exclusive."""
        result = runner.invoke(cli, ["run", "--config", str(small_config), "--preset", "desk-scale"])
        assert result.exit_code == 2

    def test_plain_value_error(self, runner, small_config, monkeypatch):
        """Argument errors raised as ValueError exit with 2."""
        def reject(*args, **kwargs):
            raise ValueError("buffer sweep needs at least two latency values")

        monkeypatch.setattr("simulation.experiments.buffer_sweep", reject)
        result = runner.invoke(cli, ["buffer-sweep", "--config", str(small_config)])
        assert result.exit_code == 2
        assert "error[config]: buffer sweep needs at least two latency values" in result.output


class TestRun:
    """The run command and its files."""

    def test_deterministic_csv(self, runner, small_config, tmp_path):
        """Two runs with the same seed write identical CSV bodies."""
        bodies = []
        for name in ("first", "second"):
            out = tmp_path / name
            result = runner.invoke(cli, ["run", "--config", str(small_config), "--out", str(out)])
            assert result.exit_code == 0, result.output
            (csv_path,) = out.glob("run-*-11.csv")
            bodies.append(csv_path.read_bytes())
            (summary_path,) = out.glob("run-*-11.json")
            summary = reporting.load_summary(summary_path)
            assert summary["config"]["seed"] == 11
            assert summary["results"]["emitted"] == 300
        assert bodies[0] == bodies[1]

    def test_seed_override_and_trace(self, runner, small_config, tmp_path):
        """--seed replaces the configured seed and --trace adds the event log."""
        out = tmp_path / "traced"
        result = runner.invoke(cli, ["run", "--config", str(small_config), "--seed", "5", "--trace", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len(list(out.glob("run-*-5.csv"))) == 1
        (trace_path,) = out.glob("trace-*-5.csv")
        trace = reporting.load_csv(trace_path)
        assert trace["event"].iloc[0] == "emit_pair"

    def test_default_output_dir(self, runner, small_config, output_dir):
        """Without --out the configured results directory is used."""
        result = runner.invoke(cli, ["run", "--config", str(small_config)])
        assert result.exit_code == 0, result.output
        assert len(list(output_dir.glob("run-*.csv"))) == 1

    def test_config_echo_reproduces_run(self, runner, small_config, tmp_path):
        """Re-running the config echo from a summary gives the same report."""
        first = tmp_path / "first"
        result = runner.invoke(cli, ["run", "--config", str(small_config), "--out", str(first)])
        assert result.exit_code == 0, result.output
        (summary_path,) = first.glob("run-*-11.json")
        summary = reporting.load_summary(summary_path)

        echo_path = tmp_path / "echo.yaml"
        echo_path.write_text(yaml.safe_dump(summary["config"]))
        second = tmp_path / "second"
        result = runner.invoke(cli, ["run", "--config", str(echo_path), "--out", str(second)])
        assert result.exit_code == 0, result.output

        (rerun_path,) = second.glob("run-*-11.json")
        assert reporting.load_summary(rerun_path)["results"] == summary["results"]
        assert next(second.glob("run-*-11.csv")).read_bytes() == next(first.glob("run-*-11.csv")).read_bytes()


class TestExperimentCommands:
    """Sweep commands write their tables."""

    def test_fidelity_curve(self, runner, small_config, tmp_path):
        """One row per technology and grid point."""
        result = runner.invoke(cli, ["fidelity-curve", "--config", str(small_config), "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        (path,) = tmp_path.glob("fidelity-curve-*.csv")
        assert len(reporting.load_csv(path)) == 6 * 11

    def test_buffer_sweep(self, runner, small_config, tmp_path):
        """One row per latency."""
        result = runner.invoke(cli, ["buffer-sweep", "--config", str(small_config), "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        (path,) = tmp_path.glob("buffer-sweep-*.csv")
        frame = reporting.load_csv(path)
        assert list(frame["latency_s"]) == [0.0, 0.002]

    def test_rate_sweep(self, runner, small_config, tmp_path):
        """One row per threshold, with the summary alongside."""
        result = runner.invoke(cli, ["rate-sweep", "--config", str(small_config), "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        (path,) = tmp_path.glob("rate-sweep-*.csv")
        frame = reporting.load_csv(path)
        assert list(frame["fidelity_threshold"]) == [0.81, 0.99]
        assert len(list(tmp_path.glob("rate-sweep-*.json"))) == 1
