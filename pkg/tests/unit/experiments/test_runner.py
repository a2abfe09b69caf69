from unittest.mock import MagicMock, patch

import pytest

from dev.mocks import MockArtifactWriter
from src.backend.experiments import validation
from src.backend.experiments.runner import (
    EXIT_OK,
    EXIT_VALIDATION_FAILED,
    EXPERIMENTS,
    ExperimentRunner,
)
from src.backend.models.errors import BlowUpError
from src.protocols.schemas import ExperimentKind, OutputFormat


class TestExperimentRunner:
    def setup_method(self):
        """Set up a runner writing into memory"""
        self.writer = MockArtifactWriter()
        self.factory_calls = []

        def factory(output_dir, formats=(OutputFormat.CSV, OutputFormat.JSON)):
            self.factory_calls.append((output_dir, formats))
            return self.writer

        self.factory = factory

    def test_every_kind_is_registered(self):
        """Test each experiment kind has a runner entry"""
        assert set(EXPERIMENTS) == set(ExperimentKind)

    def test_run_simulate(self, small_config):
        """Test a simulate run writes its tables and the manifest"""
        runner = ExperimentRunner(writer_factory=self.factory, output_override="out/run")
        result = runner.run(small_config)

        assert result.exit_code == EXIT_OK
        assert result.kind is ExperimentKind.SIMULATE
        assert self.factory_calls[0][0] == "out/run"
        for name in ("trajectory.csv", "monitors.csv", "history.csv", "summary.json", "manifest.json"):
            assert self.writer.exists(name)
        manifest = self.writer.read_json("manifest.json")
        assert manifest["seed"] == 3
        assert manifest["step_index"] == 20
        assert manifest["config"] == small_config.raw
        assert "trajectory.csv" in manifest["artifacts"]
        assert result.summary["step_index"] == 20

    def test_progress_callback(self, small_config):
        """Test phases are reported with their position"""
        callback = MagicMock()
        ExperimentRunner(writer_factory=self.factory, progress_callback=callback).run(small_config)
        stages = [c.args for c in callback.call_args_list]
        assert stages == [("integrating", 1, 2), ("writing", 2, 2)]

    def test_progress_callback_errors_are_swallowed(self, small_config):
        """Test a failing callback does not stop the experiment"""
        callback = MagicMock(side_effect=RuntimeError("display gone"))
        with patch("src.backend.experiments.runner.logger") as mock_logger:
            result = ExperimentRunner(writer_factory=self.factory, progress_callback=callback).run(
                small_config
            )
        assert result.exit_code == EXIT_OK
        assert mock_logger.warning.call_count == 2

    def test_blow_up_writes_report(self, small_config):
        """Test blowup.json is written before the error propagates"""
        error = BlowUpError(0.35, last_diagnostics={"t": 0.3, "energy": 1e300})
        with patch("src.backend.experiments.simulate.integrate", side_effect=error):
            with pytest.raises(BlowUpError):
                ExperimentRunner(writer_factory=self.factory).run(small_config)
        report = self.writer.read_json("blowup.json")
        assert report["time"] == 0.35
        assert report["last_diagnostics"]["energy"] == 1e300
        assert report["seed"] == 3
        assert not self.writer.exists("manifest.json")

    def test_failed_validation_exit_code(self, config_dict, config_parser):
        """Test a failing validation suite maps to the validation exit code"""
        config_dict["experiment"] = {"kind": "validate", "seed": 1, "params": {"suites": ["always_fails"]}}
        config = config_parser.build(config_dict)
        with patch.dict(validation.CHECKS, {"always_fails": lambda c: (False, {})}):
            result = ExperimentRunner(writer_factory=self.factory).run(config)
        assert result.exit_code == EXIT_VALIDATION_FAILED
        assert self.writer.read_json("validation.json")["failed"] == ["always_fails"]

    def test_resume_continues_run(self, small_config):
        """Test resume appends to the stored tables"""
        runner = ExperimentRunner(writer_factory=self.factory)
        runner.run(small_config)
        result = runner.resume("memory://run", 0.5)

        assert result.exit_code == EXIT_OK
        assert result.summary["resumed"] is True
        manifest = self.writer.read_json("manifest.json")
        assert manifest["step_index"] == 30
        assert manifest["resumed_from_step"] == 20
        assert manifest["config"]["integrator"]["T_final"] == pytest.approx(1.5)
