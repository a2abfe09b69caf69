"""Galerkin refinement study against the largest order in the list"""

import numpy as np
import pandas as pd

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.models.experiment_config import ExperimentConfig
from src.backend.services.integrator import galerkin_refine
from src.backend.services.model_terms import describe
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol

PHASES = ("integrating", "writing")

DEFAULT_ORDERS = (8, 16, 32, 64)


def is_monotone(errors: list[float], rel_tol: float = 1e-9) -> bool:
    """Nonincreasing up to a relative tolerance on the first error"""
    errors = np.asarray(errors, dtype=float)
    slack = rel_tol * max(float(errors.max(initial=0.0)), 1e-300)
    return bool(np.all(np.diff(errors) <= slack))


def run_refine(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    spec, cfg, params = config.model, config.integrator, config.params
    m_list = [int(m) for m in params.get("m_list", DEFAULT_ORDERS)]
    profile = config.initial_profile()
    u0 = profile.base_state(max(m_list), config.rng())
    phi = profile.sampler(max(m_list), spec.r, config.rng())
    table = galerkin_refine(spec, phi, cfg, m_list)
    report("integrating")

    # the reference order has error zero by construction
    errors_H = [row["error_H"] for row in table[:-1]]
    errors_H12 = [row["error_H12"] for row in table[:-1]]
    summary = {
        "model": describe(spec),
        "m_list": m_list,
        "initial_norm": float(np.linalg.norm(u0)),
        "table": table,
        "monotone_H": is_monotone(errors_H),
        "monotone_H12": is_monotone(errors_H12),
    }
    outcome = ExperimentOutcome(summary=summary)
    outcome.add(writer.write_frame("refine.csv", pd.DataFrame(table)))
    outcome.add(writer.write_json("refine.json", summary))
    report("writing")
    return outcome
