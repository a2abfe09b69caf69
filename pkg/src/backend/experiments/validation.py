"""
Self-checks of the solver and the diagnostics.

Each check returns (passed, details) and is timed by run_validate. Checks that need a
nonlinear model use the one in the config; the rest build their own instances.
"""

import io
import logging
import time
from dataclasses import replace
from typing import Callable

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from src.backend.experiments.outcome import ExperimentOutcome, ReportPhase
from src.backend.experiments.refine import is_monotone
from src.backend.models.errors import ConfigError, FitError
from src.backend.models.experiment_config import ExperimentConfig, InitialProfile
from src.backend.models.model_spec import (
    BirthFunction,
    DelayedMap,
    DelayFunctional,
    ModelSpec,
    Nonlinearity,
    Smoothing,
)
from src.backend.models.point_cloud import PointCloud
from src.backend.models.preset_repository import PresetRepository
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig
from src.backend.services import history as history_ops
from src.backend.services.config_parser import ConfigParser
from src.backend.services.diagnostics import (
    absorbing_radius,
    almost_lipschitz_check,
    dependence_scaling,
    fit_decay,
    lyapunov_sandwich,
    pair_separation,
)
from src.backend.services.dimension import (
    box_counting,
    cantor_points,
    correlation_dimension,
    sample_attractor,
)
from src.backend.services.integrator import galerkin_refine, integrate
from src.backend.services.model_terms import (
    check_dissipativity as check_g_dissipativity,
    compatibility_residual,
    eta_of_coeffs,
    eval_G,
    eval_Pi,
    fit_dissipativity_constants,
)
from src.backend.services.spectral_core import (
    apply_A_power,
    build_dirichlet_spectrum,
    frac_norm,
    from_grid,
    to_grid,
)
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol
from src.protocols.schemas import BirthKind, DelayKind, Scheme, SmoothingKind

logger = logging.getLogger(__name__)

Check = Callable[[ExperimentConfig], tuple[bool, dict]]

# oscillating instance sampled by the attractor_dimension suite
DIMENSION_PRESET = "feedback"


def linear_model(
    m: int,
    r: float = 1.0,
    slope: float = 0.0,
    smoothing: Smoothing = Smoothing(SmoothingKind.IDENTITY),
    h=None,
    L: float = np.pi,
) -> ModelSpec:
    """u' = -A u - slope B u(t - r) + h with G switched off"""
    return ModelSpec(
        spectrum=build_dirichlet_spectrum(m, L),
        eta=DelayFunctional(DelayKind.CONSTANT, r=r, tau0=r),
        fmap=DelayedMap(BirthFunction(BirthKind.LINEAR, slope=slope), smoothing),
        gterm=Nonlinearity(a1=0.0, a2=0.0, a3=0.0),
        h=SpectralState(np.zeros(m) if h is None else h),
    )


def _truncate(cfg: IntegratorConfig, T: float) -> IntegratorConfig:
    """cfg with T_final rounded to a whole number of steps"""
    return replace(cfg, T_final=max(1, int(round(T / cfg.dt))) * cfg.dt)


def check_spectral(config: ExperimentConfig) -> tuple[bool, dict]:
    s = build_dirichlet_spectrum(64)
    rng = config.rng(10)
    worst_norm, worst_group, worst_grid = 0.0, 0.0, 0.0
    for _ in range(1000):
        u = SpectralState(rng.standard_normal(64) / np.arange(1, 65))
        a, b = rng.uniform(-1.0, 1.0, 2)
        direct = frac_norm(u, a, s)
        via_power = np.linalg.norm(apply_A_power(u, a, s).coeffs)
        worst_norm = max(worst_norm, abs(direct - via_power) / max(direct, 1e-300))
        twice = apply_A_power(apply_A_power(u, a, s), b, s).coeffs
        once = apply_A_power(u, a + b, s).coeffs
        worst_group = max(worst_group, np.linalg.norm(twice - once) / np.linalg.norm(once))
        back = from_grid(to_grid(u)).coeffs
        worst_grid = max(worst_grid, np.linalg.norm(back - u.coeffs) / np.linalg.norm(u.coeffs))
    worst = max(worst_norm, worst_group, worst_grid)
    return worst <= 1e-12, {
        "norm_identity": worst_norm,
        "power_group": worst_group,
        "grid_round_trip": worst_grid,
    }


def check_linear_exactness(config: ExperimentConfig) -> tuple[bool, dict]:
    spec = linear_model(4)
    cfg = IntegratorConfig(dt=1e-3, T_final=1.0, scheme=Scheme.ETD1, record_every=1000)
    u0 = np.array([1.0, 0.5, -0.25, 0.125])
    record = integrate(spec, lambda theta: SpectralState(u0, theta), cfg)
    exact = np.exp(-spec.spectrum.eigenvalues * 1.0) * u0
    error = np.linalg.norm(record.final_history.coeffs(-1) - exact) / np.linalg.norm(exact)
    return error <= 1e-12, {"relative_error": float(error), "steps": cfg.n_steps}


# lambda_1 = (pi / L)^2 ~ 1e-5 stands in for the undamped delay equation u' = -u(t - r)
ORACLE_LENGTH = 1.0e3


def delay_ode_oracle(T: float, r: float = 1.0, lam: float = 0.0) -> float:
    """u' = -lam u - u(t - r), u = 1 on [-r, 0], solved by the method of steps"""
    pieces = []

    def delayed(t: float) -> float:
        if t <= 0.0:
            return 1.0
        for t0, t1, sol in pieces:
            if t0 <= t <= t1:
                return float(sol.sol(t)[0])
        raise ValueError(f"Oracle queried at t={t} before it was integrated")

    start, value = 0.0, 1.0
    while start < T - 1e-14:
        end = min(start + r, T)
        sol = solve_ivp(
            lambda t, y: -lam * y - delayed(t - r),
            (start, end),
            [value],
            method="DOP853",
            dense_output=True,
            rtol=1e-13,
            atol=1e-14,
        )
        pieces.append((start, end, sol))
        start, value = end, float(sol.y[0, -1])
    return value


def check_delay_oracle(config: ExperimentConfig) -> tuple[bool, dict]:
    T = 5.0
    spec = linear_model(1, slope=1.0, L=ORACLE_LENGTH)
    lam = spec.spectrum.lambda_1
    reference = delay_ode_oracle(T, lam=lam)
    details, passed = {"reference": reference, "lambda_1": lam}, True
    for scheme, order in ((Scheme.ETD1, 1.0), (Scheme.ETD_RK2, 2.0)):
        errors = []
        for dt in (0.1, 0.05, 0.025, 0.0125):
            cfg = IntegratorConfig(dt=dt, T_final=T, scheme=scheme, record_every=10**6)
            record = integrate(
                spec, lambda theta: SpectralState([1.0], theta), cfg, record_initial=False
            )
            errors.append(abs(float(record.final_history.coeffs(-1)[0]) - reference))
        observed = [float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)]
        passed &= all(abs(o - order) <= 0.3 for o in observed)
        details[scheme.value] = {"errors": errors, "observed_orders": observed}
    return passed, details


# cubic with every coefficient active; checked next to whatever g the config carries
REFERENCE_CUBIC = Nonlinearity(a1=0.5, a2=-1.0, a3=1.0)


def _nonlinearities(config: ExperimentConfig) -> dict[str, Nonlinearity]:
    terms = {"reference_cubic": REFERENCE_CUBIC}
    if not config.model.gterm.is_zero:
        terms["configured"] = config.model.gterm
    return terms


def potential_gap(gterm: Nonlinearity, L: float, rng: np.random.Generator, m: int = 32) -> float:
    """Worst relative gap between <G(u), v> and the central difference of Pi over 100 pairs"""
    eps, worst = 1e-4, 0.0
    for _ in range(100):
        u = SpectralState(rng.standard_normal(m) / np.arange(1, m + 1))
        v = SpectralState(rng.standard_normal(m) / np.arange(1, m + 1))
        G = eval_G(gterm, u, L).coeffs
        directional = float(np.dot(G, v.coeffs))
        central = (eval_Pi(gterm, u + v * eps, L) - eval_Pi(gterm, u - v * eps, L)) / (2.0 * eps)
        scale = np.linalg.norm(G) * np.linalg.norm(v.coeffs)
        worst = max(worst, abs(directional - central) / max(scale, 1e-300))
    return worst


def check_potentiality(config: ExperimentConfig) -> tuple[bool, dict]:
    L = config.model.spectrum.domain_length
    gaps = {
        name: potential_gap(gterm, L, config.rng(11))
        for name, gterm in _nonlinearities(config).items()
    }
    return max(gaps.values()) <= 1e-6, {"max_relative_error": gaps, "eps": 1e-4}


def check_eta_lipschitz(config: ExperimentConfig) -> tuple[bool, dict]:
    rng = config.rng(12)
    m, r = 16, 1.0
    kinds = [
        DelayFunctional(DelayKind.TANH_OF_INNER, r=r, w=rng.standard_normal(m), kappa=2.0),
        DelayFunctional(DelayKind.NORM_SIGMOID, r=r, kappa=3.0),
        config.model.eta,
    ]
    worst = {}
    passed = True
    for eta in kinds:
        ratio = 0.0
        for _ in range(10_000 // len(kinds) + 1):
            u = rng.standard_normal(m) * rng.uniform(0.01, 3.0)
            v = u + rng.standard_normal(m) * rng.uniform(1e-6, 1.0)
            gap = abs(eta_of_coeffs(eta, u) - eta_of_coeffs(eta, v))
            bound = eta.lipschitz * np.linalg.norm(u - v)
            passed &= gap <= bound * (1.0 + 1e-12) + 1e-15
            ratio = max(ratio, gap / max(bound, 1e-300))
        worst[eta.kind.value] = ratio
    return bool(passed), {"max_gap_over_bound": worst}


def _dissipativity_cfg(config: ExperimentConfig) -> IntegratorConfig:
    T = float(config.params.get("dissipativity_T", 200.0))
    stride = max(1, int(round(0.1 / config.integrator.dt)))
    return replace(_truncate(config.integrator, T), record_every=stride)


def check_dissipativity(config: ExperimentConfig) -> tuple[bool, dict]:
    spec = config.model
    cfg = _dissipativity_cfg(config)
    radii, decays = [], []
    for i, amplitude in enumerate((1.0, 100.0)):
        phi = InitialProfile(kind="random", amplitude=amplitude).sampler(
            spec.m, spec.r, config.rng(20 + i)
        )
        record = integrate(spec, phi, cfg)
        radii.append(absorbing_radius(record, "energy").R_star)
        try:
            fit = fit_decay(record.times, record.column("V_lyap"), (spec.r, cfg.T_final))
            decays.append(fit.as_dict())
        except FitError as e:
            logger.warning(f"Lyapunov decay fit failed: {e}")
            decays.append(None)
    spread = (max(radii) - min(radii)) / max(max(radii), 1e-300)
    fits_ok = all(d is not None and d["rate"] > 0.0 and d["residual"] < 0.1 for d in decays)
    return spread <= 0.1 and fits_ok, {
        "R_star": radii,
        "spread": spread,
        "lyapunov_decay": decays,
    }


def _dependence(config: ExperimentConfig, deltas: list[float]) -> dict:
    spec = config.model
    cfg = _truncate(config.integrator, float(config.params.get("dependence_T", 3.0 * spec.r)))
    phi = config.initial_profile().sampler(spec.m, spec.r, config.rng())
    direction = InitialProfile(kind="random").sampler(spec.m, spec.r, config.rng(30))
    return dependence_scaling(spec, phi, direction, deltas, cfg)


def check_continuous_dependence(config: ExperimentConfig) -> tuple[bool, dict]:
    result = _dependence(config, [1e-2, 1e-3, 1e-4])
    return abs(result["slope_sup_dist"] - 1.0) <= 0.1, result


def check_holder(config: ExperimentConfig) -> tuple[bool, dict]:
    result = _dependence(config, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5])
    return result["slope_smoothing"] >= 0.45, result


def check_quasi_stability(config: ExperimentConfig) -> tuple[bool, dict]:
    spec = linear_model(8)
    cfg = IntegratorConfig(dt=0.01, T_final=4.0)
    rng = config.rng(31)
    a, b = rng.standard_normal(8), rng.standard_normal(8)
    report = pair_separation(
        spec,
        lambda theta: SpectralState(a, theta),
        lambda theta: SpectralState(b, theta),
        cfg,
    )
    lam = spec.spectrum.lambda_1
    return report.decay_rate >= 0.95 * lam, {**report.summary(), "lambda_1": lam}


def check_galerkin(config: ExperimentConfig) -> tuple[bool, dict]:
    m_list = [int(m) for m in config.params.get("m_list", (8, 16, 32, 64))]
    cfg = _truncate(config.integrator, float(config.params.get("refine_T", 2.0)))
    profile = config.initial_profile()
    phi = profile.sampler(max(m_list), config.model.r, config.rng())
    table = galerkin_refine(config.model, phi, cfg, m_list)
    errors = [row["error_H"] for row in table[:-1]]
    return is_monotone(errors), {"table": table}


def check_dimension_estimators(config: ExperimentConfig) -> tuple[bool, dict]:
    rng = config.rng(40)
    square = PointCloud(rng.uniform(0.0, 1.0, (100_000, 2)))
    square_slope = box_counting(square, [2.0**-k for k in range(1, 9)]).slope
    cantor = PointCloud(cantor_points(10))
    cantor_box = box_counting(cantor, [3.0**-k for k in range(1, 9)]).slope
    cantor_corr = correlation_dimension(cantor, [3.0**-k for k in range(1, 8)]).slope
    point = PointCloud(np.zeros((50, 3)))
    point_slope = box_counting(point).slope
    segment = PointCloud(rng.uniform(0.0, 1.0, (2000, 1)))
    segment_corr = correlation_dimension(segment, [2.0**-k for k in range(1, 9)]).slope
    target = np.log(2.0) / np.log(3.0)
    passed = (
        abs(square_slope - 2.0) <= 0.1
        and abs(cantor_box - target) <= 0.05 * target
        and point_slope == 0.0
        and cantor_corr <= cantor_box + 0.05
        and abs(segment_corr - 1.0) <= 0.1
    )
    return passed, {
        "square": square_slope,
        "cantor_box": cantor_box,
        "cantor_correlation": cantor_corr,
        "single_point": point_slope,
        "segment_correlation": segment_corr,
    }


def check_resume(config: ExperimentConfig) -> tuple[bool, dict]:
    spec = linear_model(8)
    cfg = IntegratorConfig(dt=0.01, T_final=10.0)
    u0 = InitialProfile(kind="random").base_state(8, config.rng(50))

    def phi(theta):
        return SpectralState(u0, theta)

    full = integrate(spec, phi, replace(cfg, T_final=20.0))

    first = integrate(spec, phi, cfg)
    text = history_ops.to_frame(first.final_history).to_csv(index=False, float_format="%.17g")
    frame = pd.read_csv(io.StringIO(text), float_precision="round_trip")
    restored = history_ops.from_frame(frame, spec.r, cfg.dt, t_now=first.step_index * cfg.dt)
    second = integrate(
        spec,
        restored,
        cfg,
        start_step=first.step_index,
        record_initial=False,
        initial_integral=first.dissipation_integral,
    )
    joined = first.extend(second)
    same_times = np.array_equal(np.asarray(joined.times), np.asarray(full.times))
    diff = float(np.max(np.abs(np.asarray(joined.diag) - np.asarray(full.diag))))
    return same_times and diff <= 1e-12, {"max_abs_difference": diff, "same_times": same_times}


def check_almost_lipschitz(config: ExperimentConfig) -> tuple[bool, dict]:
    spec, dt = config.model, config.integrator.dt
    rng = config.rng(60)
    worst = 0.0
    for _ in range(50):
        a, b = rng.standard_normal((2, spec.m)) / np.arange(1, spec.m + 1)
        slope_a, slope_b = rng.uniform(-1.0, 1.0, 2)
        h1 = history_ops.init_from_function(
            lambda theta: SpectralState((1.0 + slope_a * theta) * a, theta), spec.r, dt, spec.m
        )
        h2 = history_ops.init_from_function(
            lambda theta: SpectralState((1.0 + slope_b * theta) * b, theta), spec.r, dt, spec.m
        )
        lhs, rhs = almost_lipschitz_check(spec, h1, h2)
        worst = max(worst, lhs / max(rhs, 1e-300))
    return worst <= 1.0 + 1e-9, {"max_lhs_over_rhs": worst}


def check_trajectory_functionals(config: ExperimentConfig) -> tuple[bool, dict]:
    """Lyapunov sandwich and compatibility residual along one trajectory of the model"""
    spec = config.model
    cfg = _truncate(config.integrator, float(config.params.get("functionals_T", 5.0)))
    phi = config.initial_profile().sampler(spec.m, spec.r, config.rng())
    snapshots = []
    record = integrate(spec, phi, cfg, on_record=lambda h, t: snapshots.append(h.snapshot()))
    sandwich = lyapunov_sandwich(spec, snapshots)
    residual = compatibility_residual(spec, record.final_history)
    passed = sandwich["holds"] and residual <= 10.0 * cfg.dt
    return passed, {"lyapunov_sandwich": sandwich, "compatibility_residual": residual}


def check_dissipativity_constants(config: ExperimentConfig) -> tuple[bool, dict]:
    """Fitted (c1, c2) must hold on a fresh sample, for the configured g and a full cubic"""
    s = config.model.spectrum
    passed, details = True, {}
    for name, gterm in _nonlinearities(config).items():
        c1, c2 = fit_dissipativity_constants(gterm, s, config.rng(70))
        holds = check_g_dissipativity(gterm, s, c1, c2, config.rng(71))
        passed &= holds
        details[name] = {"c1": c1, "c2": c2, "holds": holds}
    return passed, details


def _dimension_instance(config: ExperimentConfig, preset_id: str) -> ExperimentConfig:
    preset = PresetRepository().get_preset_by_id(preset_id)
    if preset is None:
        raise ConfigError(
            "experiment.params.dimension_preset", f"no preset named '{preset_id}'"
        )
    return ConfigParser().build(preset.read_config(), seed=config.seed or 0)


def check_attractor_dimension(config: ExperimentConfig) -> tuple[bool, dict]:
    """Box-counting slopes of a sampled oscillating attractor must agree across embeddings"""
    preset_id = config.params.get("dimension_preset", DIMENSION_PRESET)
    instance = _dimension_instance(config, preset_id)
    spec, cfg, params = instance.model, instance.integrator, instance.params
    embeds = [k for k in (8, 16, 32) if k <= spec.m]
    cloud = sample_attractor(
        spec,
        cfg,
        n_traj=int(params.get("n_traj", 8)),
        transient=float(params.get("transient", 0.5 * cfg.T_final)),
        sample_dt=float(params.get("sample_dt", cfg.dt)),
        embed_modes=embeds[-1],
        seed=instance.seed or 0,
        scale=float(params.get("scale", 1.0)),
    )
    slopes = {k: box_counting(PointCloud(cloud.points[:, :k])).slope for k in embeds}
    values = np.array(list(slopes.values()))
    spread = float(np.ptp(values))
    passed = bool(np.all(np.isfinite(values)) and np.min(values) > 0.0 and spread < 0.5)
    return passed, {
        "preset": preset_id,
        "points": cloud.n,
        "slopes": {str(k): float(v) for k, v in slopes.items()},
        "spread": spread,
    }


CHECKS: dict[str, Check] = {
    "spectral_exactness": check_spectral,
    "etd_linear_exactness": check_linear_exactness,
    "delay_ode_oracle": check_delay_oracle,
    "potentiality": check_potentiality,
    "eta_lipschitz": check_eta_lipschitz,
    "dissipativity": check_dissipativity,
    "continuous_dependence": check_continuous_dependence,
    "holder_smoothing": check_holder,
    "quasi_stability_linear": check_quasi_stability,
    "galerkin_convergence": check_galerkin,
    "dimension_estimators": check_dimension_estimators,
    "resume_equivalence": check_resume,
    "almost_lipschitz": check_almost_lipschitz,
    "trajectory_functionals": check_trajectory_functionals,
    "dissipativity_constants": check_dissipativity_constants,
    "attractor_dimension": check_attractor_dimension,
}

# sampling an attractor takes minutes; only run when asked for
OPT_IN = {"attractor_dimension"}


def selected_checks(config: ExperimentConfig) -> list[str]:
    names = config.params.get("suites")
    if names is None:
        return [name for name in CHECKS if name not in OPT_IN]
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown validation suites: {', '.join(unknown)}")
    return list(names)


def phases(config: ExperimentConfig) -> tuple[str, ...]:
    return (*selected_checks(config), "writing")


def run_check(name: str, config: ExperimentConfig) -> dict:
    """Run one check; a failing or raising check is reported, never propagated"""
    started = time.perf_counter()
    try:
        passed, details = CHECKS[name](config)
    except Exception as e:
        logger.exception(f"Validation suite '{name}' raised")
        passed, details = False, {"error": f"{type(e).__name__}: {e}"}
    seconds = time.perf_counter() - started
    logger.info(f"{name}: {'passed' if passed else 'FAILED'} in {seconds:.2f}s")
    return {"name": name, "passed": bool(passed), "details": details, "seconds": seconds}


def run_validate(
    config: ExperimentConfig, writer: ArtifactWriterProtocol, report: ReportPhase
) -> ExperimentOutcome:
    results = []
    for name in selected_checks(config):
        results.append(run_check(name, config))
        report(name)
    passed = all(r["passed"] for r in results)
    summary = {
        "passed": passed,
        "failed": [r["name"] for r in results if not r["passed"]],
        "suites": results,
    }
    outcome = ExperimentOutcome(summary=summary, passed=passed)
    outcome.add(writer.write_json("validation.json", summary, force=True))
    report("writing")
    return outcome
