"""Separation of two nearby trajectories"""

import pandas as pd

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.models.experiment_config import ExperimentConfig, InitialProfile
from src.backend.models.spectrum import SpectralState
from src.backend.services.diagnostics import dependence_scaling, pair_separation
from src.backend.services.history import c_norm
from src.backend.services.integrator import initial_history
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol

PHASES = ("integrating", "scaling", "writing")

DEFAULT_DELTA = 1e-3


def run_pair(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    spec, cfg, params = config.model, config.integrator, config.params
    phi = config.initial_profile().sampler(spec.m, spec.r, config.rng())
    direction_profile = config.initial_profile("perturbation")
    if "perturbation" not in params:
        direction_profile = InitialProfile(kind="random")
    direction = direction_profile.sampler(spec.m, spec.r, config.rng(1))
    delta = float(params.get("delta", DEFAULT_DELTA))
    unit = c_norm(initial_history(spec, direction, cfg))

    def phi2(theta):
        return SpectralState(
            phi(theta).coeffs + (delta / unit) * direction(theta).coeffs, theta
        )

    separation = pair_separation(spec, phi, phi2, cfg, beta=float(params.get("beta", 0.5)))
    report("integrating")

    summary = {"delta": delta, **separation.summary()}
    deltas = params.get("dependence_deltas")
    if deltas:
        summary["dependence"] = dependence_scaling(spec, phi, direction, deltas, cfg)
    report("scaling")

    outcome = ExperimentOutcome(summary=summary)
    frame = pd.DataFrame(
        {
            "t": separation.times,
            "cl_dist": separation.cl_dist,
            "weak_term": separation.weak_term,
            "sup_dist_H": separation.sup_dist_H,
        }
    )
    outcome.add(writer.write_frame("separation.csv", frame))
    outcome.add(writer.write_json("separation.json", summary))
    report("writing")
    return outcome
