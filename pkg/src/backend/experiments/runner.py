import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from src.backend.experiments import (
    dimension_study,
    dissipativity,
    pair,
    refine,
    simulate,
    validation,
)
from src.backend.experiments.outcome import ExperimentOutcome
from src.backend.models.errors import BlowUpError
from src.backend.models.experiment_config import ExperimentConfig
from src.backend.services.artifact_writer import ArtifactWriter
from src.protocols.protocols.experiment_protocol import ExperimentProtocol
from src.protocols.schemas import ExperimentKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_BLOW_UP = 3
EXIT_RUNTIME_ERROR = 4

ProgressCallback = Callable[[str, int, int], None]


def _fixed(phases: tuple[str, ...]) -> Callable[[ExperimentConfig], tuple[str, ...]]:
    return lambda config: phases


# kind -> (experiment function, phase names for a config)
EXPERIMENTS = {
    ExperimentKind.SIMULATE: (simulate.run_simulate, _fixed(simulate.PHASES)),
    ExperimentKind.PAIR: (pair.run_pair, _fixed(pair.PHASES)),
    ExperimentKind.DISSIPATIVITY: (
        dissipativity.run_dissipativity,
        _fixed(dissipativity.PHASES),
    ),
    ExperimentKind.DIMENSION: (
        dimension_study.run_dimension,
        _fixed(dimension_study.PHASES),
    ),
    ExperimentKind.REFINE: (refine.run_refine, _fixed(refine.PHASES)),
    ExperimentKind.VALIDATE: (validation.run_validate, validation.phases),
}


@dataclass
class RunResult:
    kind: ExperimentKind
    output_dir: str
    exit_code: int = EXIT_OK
    summary: dict = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)


class ExperimentRunner(ExperimentProtocol):
    """Runs one experiment into its artifact directory and writes the manifest"""

    def __init__(
        self,
        writer_factory: Callable[..., object] = ArtifactWriter,
        progress_callback: Optional[ProgressCallback] = None,
        output_override: Optional[str] = None,
    ):
        """
        Initialize the runner.

        Args:
            writer_factory: Builds the artifact writer from (output_dir, formats)
            progress_callback: Optional callback function to report progress (stage, current, total)
            output_override: Output directory taking precedence over the config (--out)
        """
        self.writer_factory = writer_factory
        self.progress_callback = progress_callback
        self.output_override = output_override
        self.current_phase = 0
        self.total_phases = 0

    def run(self, config: ExperimentConfig) -> RunResult:
        experiment, phases = EXPERIMENTS[config.kind]
        output_dir = str(config.resolve_output_dir(self.output_override))
        writer = self.writer_factory(output_dir, config.output.formats)
        self._start(len(phases(config)))
        logger.info(f"Running '{config.kind.value}' experiment into {output_dir}")

        started = time.perf_counter()
        try:
            outcome = experiment(config, writer, self._report_phase_progress)
        except BlowUpError as e:
            self._write_blowup(writer, config, e)
            raise
        wall_time = time.perf_counter() - started
        return self._finish(writer, config, outcome, wall_time)

    def resume(self, run_dir: str, additional_T: float) -> RunResult:
        writer = self.writer_factory(str(run_dir))
        self._start(len(simulate.RESUME_PHASES))
        logger.info(f"Resuming run in {run_dir} by {additional_T}")

        started = time.perf_counter()
        try:
            config, outcome = simulate.resume_simulate(
                writer, additional_T, self._report_phase_progress
            )
        except BlowUpError as e:
            self._write_blowup(writer, None, e)
            raise
        wall_time = time.perf_counter() - started
        return self._finish(writer, config, outcome, wall_time)

    def _finish(
        self,
        writer,
        config: ExperimentConfig,
        outcome: ExperimentOutcome,
        wall_time: float,
    ) -> RunResult:
        extra = dict(outcome.manifest_extra)
        echoed = extra.pop("config", config.raw)
        manifest = writer.write_manifest(
            echoed, config.seed, wall_time, outcome.artifacts, extra
        )
        exit_code = EXIT_OK if outcome.passed else EXIT_VALIDATION_FAILED
        logger.info(
            f"'{config.kind.value}' finished in {wall_time:.2f}s "
            f"with {len(outcome.artifacts)} artifacts (exit {exit_code})"
        )
        return RunResult(
            kind=config.kind,
            output_dir=writer.output_dir,
            exit_code=exit_code,
            summary=outcome.summary,
            artifacts=[*outcome.artifacts, manifest],
        )

    def _write_blowup(self, writer, config: Optional[ExperimentConfig], error: BlowUpError):
        payload = {
            "time": error.time,
            "message": str(error),
            "last_diagnostics": error.last_diagnostics or {},
        }
        if config is not None:
            payload["config"] = config.raw
            payload["seed"] = config.seed
        try:
            writer.write_json("blowup.json", payload, force=True)
        except OSError as write_error:
            logger.error(f"Could not write blowup.json: {write_error}")

    def _start(self, total: int) -> None:
        self.current_phase = 0
        self.total_phases = total

    def _report_phase_progress(self, stage: str):
        """Report phase completion progress"""
        self.current_phase += 1
        logger.info(f"Phase {self.current_phase}/{self.total_phases} completed: {stage}")
        if self.progress_callback:
            try:
                self.progress_callback(stage, self.current_phase, self.total_phases)
            except Exception as callback_error:
                # the experiment keeps running when the callback fails
                logger.warning(f"Progress callback error: {callback_error}")
