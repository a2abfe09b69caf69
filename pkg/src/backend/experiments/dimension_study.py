"""Box-counting and correlation dimension of a sampled attractor across embeddings"""

import logging
from dataclasses import replace

import numpy as np
import pandas as pd

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.models.errors import FitError
from src.backend.models.experiment_config import ExperimentConfig
from src.backend.models.point_cloud import PointCloud
from src.backend.models.spectrum import SpectralState
from src.backend.services.dimension import (
    attraction_rate,
    box_counting,
    correlation_dimension,
    sample_attractor,
    covering_dimension_bound,
)
from src.backend.services.integrator import integrate
from src.backend.services.model_terms import random_states
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol

logger = logging.getLogger(__name__)

PHASES = ("sampling", "estimating", "attraction", "writing")

DEFAULT_EMBEDS = (8, 16, 32)
STABILITY_SPREAD = 0.5


def _embeds(params: dict, m: int) -> list[int]:
    requested = [int(k) for k in params.get("embed_modes", DEFAULT_EMBEDS)]
    kept = sorted({k for k in requested if 1 <= k <= m})
    if len(kept) < len(requested):
        logger.warning(f"Dropping embed_modes beyond m={m}: {requested} -> {kept}")
    if not kept:
        raise ValueError(f"No embed_modes in [1, {m}] among {requested}")
    return kept


def _attraction(config: ExperimentConfig, cloud: PointCloud, transient: float) -> dict:
    """Distance of a fresh trajectory to the sampled cloud and its fitted decay"""
    spec, cfg = config.model, config.integrator
    row = random_states(config.rng(7), 1, spec.m, float(config.params.get("scale", 1.0)))[0]
    record = integrate(
        spec, lambda theta: SpectralState(row, theta), replace(cfg, store_states=True)
    )
    times = np.asarray(record.times)
    states = np.vstack(record.states)
    try:
        fit = attraction_rate(times, states, cloud, window=(times[0], transient))
        return fit.as_dict()
    except FitError as e:
        logger.warning(f"Attraction rate fit failed: {e}")
        return {"rate": None, "error": str(e)}


def run_dimension(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    spec, cfg, params = config.model, config.integrator, config.params
    embeds = _embeds(params, spec.m)
    transient = float(params.get("transient", 0.5 * cfg.T_final))
    cloud = sample_attractor(
        spec,
        cfg,
        n_traj=int(params.get("n_traj", 8)),
        transient=transient,
        sample_dt=float(params.get("sample_dt", cfg.dt)),
        embed_modes=embeds[-1],
        seed=config.seed or 0,
        scale=float(params.get("scale", 1.0)),
        workers=int(params.get("workers", 1)),
    )
    report("sampling")

    estimates = {}
    for k in embeds:
        sub = PointCloud(cloud.points[:, :k], {**cloud.meta, "embed_modes": k})
        estimates[k] = {
            "box_counting": box_counting(sub).as_dict(),
            "correlation": correlation_dimension(sub).as_dict(),
        }
        logger.info(f"embed_modes={k}: box slope {estimates[k]['box_counting']['slope']:.4f}")
    slopes = [e["box_counting"]["slope"] for e in estimates.values()]
    spread = float(max(slopes) - min(slopes))
    report("estimating")

    summary = {
        "points": cloud.n,
        "meta": cloud.meta,
        "estimates": {str(k): v for k, v in estimates.items()},
        "slope_spread": spread,
        "stable_in_m": spread < STABILITY_SPREAD,
    }
    if "gamma" in params and "mZ" in params:
        summary["covering_bound"] = covering_dimension_bound(
            float(params["gamma"]), float(params["mZ"]), params.get("L_K")
        )
    if params.get("attraction", True):
        summary["attraction"] = _attraction(config, cloud, transient)
    report("attraction")

    outcome = ExperimentOutcome(summary=summary)
    columns = [f"u_{k}" for k in range(1, cloud.d + 1)]
    outcome.add(writer.write_frame("point_cloud.csv", pd.DataFrame(cloud.points, columns=columns)))
    outcome.add(writer.write_json("dimension.json", summary))
    report("writing")
    return outcome
