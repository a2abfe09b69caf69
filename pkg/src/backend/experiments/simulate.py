"""Single-trajectory runs and their continuation from a state dump"""

import copy
import logging
from dataclasses import replace

import pandas as pd

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.models.errors import ConfigError
from src.backend.models.experiment_config import ExperimentConfig
from src.backend.models.trajectory import TrajectoryRecord
from src.backend.services import history as history_ops
from src.backend.services.config_parser import ConfigParser
from src.backend.services.integrator import integrate
from src.backend.services.model_terms import compatibility_residual, describe
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol

logger = logging.getLogger(__name__)

PHASES = ("integrating", "writing")
RESUME_PHASES = ("loading", "integrating", "writing")

TRAJECTORY_CSV = "trajectory.csv"
MONITORS_CSV = "monitors.csv"
STATES_CSV = "states.csv"
HISTORY_CSV = "history.csv"


def write_record(
    writer: ArtifactWriterProtocol, record: TrajectoryRecord, suffix: str = ""
) -> list[str]:
    """trajectory / monitors tables and, when states were kept, the state dump"""
    paths = [
        writer.write_frame(f"trajectory{suffix}.csv", record.to_frame()),
        writer.write_frame(f"monitors{suffix}.csv", record.monitors_frame()),
    ]
    if record.states:
        paths.append(writer.write_frame(f"states{suffix}.csv", record.states_frame()))
    return [p for p in paths if p]


def _final_summary(config: ExperimentConfig, record: TrajectoryRecord) -> dict:
    spec = config.model
    last = dict(zip(record.to_frame().columns, record.diag[-1])) if record.diag else {}
    return {
        "model": describe(spec),
        "scheme": config.integrator.scheme.value,
        "dt": config.integrator.dt,
        "t_final": record.step_index * config.integrator.dt,
        "step_index": record.step_index,
        "samples": len(record.times),
        "last_sample": last,
        "dissipation_integral": record.dissipation_integral,
        "compatibility_residual": compatibility_residual(spec, record.final_history),
    }


def run_simulate(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    spec = config.model
    phi = config.initial_profile().sampler(spec.m, spec.r, config.rng())
    record = integrate(spec, phi, config.integrator)
    report("integrating")

    outcome = ExperimentOutcome()
    outcome.add(*write_record(writer, record))
    outcome.add(
        writer.write_frame(HISTORY_CSV, history_ops.to_frame(record.final_history), force=True)
    )
    outcome.summary = _final_summary(config, record)
    outcome.add(writer.write_json("summary.json", outcome.summary))
    outcome.manifest_extra = {
        "step_index": record.step_index,
        "dissipation_integral": record.dissipation_integral,
    }
    report("writing")
    return outcome


def _append_table(
    writer: ArtifactWriterProtocol, filename: str, frame: pd.DataFrame
) -> str:
    if writer.exists(filename):
        frame = pd.concat([writer.read_frame(filename), frame], ignore_index=True)
    return writer.write_frame(filename, frame)


def _extension_steps(additional_T: float, dt: float) -> int:
    """Whole number of steps in additional_T; anything else is a config error"""
    if not additional_T >= 0.0:
        raise ConfigError("additional_T", f"must be nonnegative, got {additional_T}")
    n = int(round(additional_T / dt))
    if abs(n * dt - additional_T) > 1e-9 * max(1.0, additional_T):
        raise ConfigError(
            "additional_T", f"{additional_T} is not a whole number of steps of dt={dt}"
        )
    return n


def resume_simulate(
    writer: ArtifactWriterProtocol, additional_T: float, report: ReportPhase
) -> tuple[ExperimentConfig, ExperimentOutcome]:
    """
    Continue the run stored in the writer's directory by additional_T.

    The history is rebuilt from history.csv and the step counter from the manifest, so
    sample times stay step * dt and the extended tables match an uninterrupted run.
    """
    manifest = writer.read_json("manifest.json")
    config = ConfigParser().build(manifest["config"])
    if config.seed is None and manifest.get("seed") is not None:
        config = config.with_seed(manifest["seed"])

    spec, dt = config.model, config.integrator.dt
    n_steps = _extension_steps(additional_T, dt)
    step_index = int(manifest["step_index"])
    h = history_ops.from_frame(
        writer.read_frame(HISTORY_CSV), spec.r, dt, t_now=step_index * dt
    )
    report("loading")

    outcome = ExperimentOutcome(
        manifest_extra={
            "config": config.raw,
            "step_index": step_index,
            "dissipation_integral": manifest.get("dissipation_integral", 0.0),
        }
    )
    if n_steps == 0:
        logger.info("additional_T = 0; nothing to continue")
        outcome.summary = {"resumed": False, "step_index": step_index}
        report("integrating")
        report("writing")
        return config, outcome

    cfg = replace(config.integrator, T_final=n_steps * dt)
    record = integrate(
        spec,
        h,
        cfg,
        start_step=step_index,
        record_initial=False,
        initial_integral=float(manifest.get("dissipation_integral", 0.0)),
    )
    report("integrating")

    outcome.add(_append_table(writer, TRAJECTORY_CSV, record.to_frame()))
    outcome.add(_append_table(writer, MONITORS_CSV, record.monitors_frame()))
    if record.states:
        outcome.add(_append_table(writer, STATES_CSV, record.states_frame()))
    outcome.add(
        writer.write_frame(HISTORY_CSV, history_ops.to_frame(record.final_history), force=True)
    )
    outcome.summary = _final_summary(config, record)
    outcome.summary["resumed"] = True
    outcome.add(writer.write_json("summary.json", outcome.summary))

    raw = copy.deepcopy(config.raw)
    raw["integrator"]["T_final"] = record.step_index * dt
    outcome.manifest_extra.update(
        {
            "config": raw,
            "step_index": record.step_index,
            "dissipation_integral": record.dissipation_integral,
            "resumed_from_step": step_index,
        }
    )
    report("writing")
    return config, outcome
