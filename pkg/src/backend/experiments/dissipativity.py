"""
Dissipativity study: trajectories from initial data of different sizes, their absorbing
radii, the decay of the Lyapunov functional, and the fitted constants of the
dissipativity inequality for G.
"""

import logging

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.experiments.simulate import write_record
from src.backend.models.errors import FitError, NonDissipativeError
from src.backend.models.experiment_config import ExperimentConfig, InitialProfile
from src.backend.services.diagnostics import (
    absorbing_radius,
    fit_decay,
    lyapunov_sandwich,
)
from src.backend.services.functionals import DEFAULT_MU
from src.backend.services.integrator import integrate
from src.backend.services.model_terms import (
    check_dissipativity,
    describe,
    fit_dissipativity_constants,
)
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol

logger = logging.getLogger(__name__)

PHASES = ("integrating", "radii", "constants", "writing")

DEFAULT_AMPLITUDES = (1.0, 100.0)
SANDWICH_STRIDE = 10


def run_dissipativity(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    spec, cfg, params = config.model, config.integrator, config.params
    amplitudes = [float(a) for a in params.get("amplitudes", DEFAULT_AMPLITUDES)]
    tail_fraction = float(params.get("tail_fraction", 0.25))
    tol = float(params.get("tol", 0.05))
    agreement = float(params.get("agreement", 0.1))
    mu = float(params.get("mu", DEFAULT_MU))

    outcome = ExperimentOutcome()
    records, sandwich_samples = [], []
    for i, amplitude in enumerate(amplitudes):
        phi = InitialProfile(kind="random", amplitude=amplitude).sampler(
            spec.m, spec.r, config.rng(i)
        )
        counter = {"n": 0}

        def _collect(h, time, counter=counter):
            if counter["n"] % SANDWICH_STRIDE == 0:
                sandwich_samples.append(h.snapshot())
            counter["n"] += 1

        record = integrate(spec, phi, cfg, on_record=_collect)
        records.append(record)
        outcome.add(*write_record(writer, record, suffix=f"_{i}"))
        logger.info(f"Run {i + 1}/{len(amplitudes)} from |phi|_C = {amplitude:g} finished")
    report("integrating")

    runs = []
    for amplitude, record in zip(amplitudes, records):
        entry = {"amplitude": amplitude}
        try:
            radius = absorbing_radius(record, "energy", tail_fraction, tol)
            entry.update(radius.as_dict())
        except NonDissipativeError as e:
            logger.warning(str(e))
            entry.update({"R_star": None, "t_entry": None, "non_dissipative": True})
        try:
            decay = fit_decay(record.times, record.column("V_lyap"), (spec.r, cfg.T_final))
            entry["lyapunov_decay"] = decay.as_dict()
        except FitError as e:
            logger.warning(f"Lyapunov decay fit failed: {e}")
            entry["lyapunov_decay"] = None
        runs.append(entry)

    radii = [r["R_star"] for r in runs if r.get("R_star") is not None]
    spread = None
    if len(radii) == len(runs) and max(radii) > 0.0:
        spread = (max(radii) - min(radii)) / max(radii)
    report("radii")

    rng_fit, rng_check = config.rng(100), config.rng(101)
    n_samples = int(params.get("n_samples", 1000))
    c1, c2 = fit_dissipativity_constants(spec.gterm, spec.spectrum, rng_fit, n_samples)
    holds = check_dissipativity(spec.gterm, spec.spectrum, c1, c2, rng_check, n_samples)
    sandwich = lyapunov_sandwich(spec, sandwich_samples, mu)
    report("constants")

    outcome.summary = {
        "model": describe(spec),
        "runs": runs,
        "R_star_spread": spread,
        "common_ball": spread is not None and spread <= agreement,
        "dissipativity_constants": {"c1": c1, "c2": c2, "holds_on_fresh_sample": holds},
        "lyapunov_sandwich": sandwich,
    }
    outcome.add(writer.write_json("dissipativity.json", outcome.summary))
    report("writing")
    return outcome
