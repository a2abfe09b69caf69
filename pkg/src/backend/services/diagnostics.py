"""
Post-processing of trajectories: decay fits, absorbing radii, the Lyapunov sandwich,
the almost-Lipschitz estimate of the delay term, and pair separation analysis.
"""

import logging
from typing import Callable, Iterator, Optional

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar

from src.backend.models.errors import FitError, NonDissipativeError
from src.backend.models.history_segment import HistorySegment
from src.backend.models.model_spec import ModelSpec
from src.backend.models.reports import AbsorbingRadius, DecayFit, SeparationReport
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig, TrajectoryRecord
from src.backend.services.functionals import DEFAULT_MU, lyapunov_V
from src.backend.services.history import (
    c_norm,
    cl_norm,
    derivative_l2,
    lip_seminorm,
    segment_difference,
)
from src.backend.services.integrator import InitialData, initial_history, step
from src.backend.services.model_terms import (
    eval_F_coeffs,
    eval_Pi,
    lipschitz_constant,
)
from src.backend.services.spectral_core import frac_norm_coeffs

__all__ = [
    "lyapunov_V",
    "fit_decay",
    "absorbing_radius",
    "pair_separation",
    "dependence_scaling",
    "almost_lipschitz_check",
    "lyapunov_sandwich",
]

logger = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 10
RATE_GRID_SIZE = 20
DECAY_SCAN_SIZE = 200


def _exp_floor(t, amplitude, rate, floor):
    return amplitude * np.exp(-rate * t) + floor


def _project(s: np.ndarray, v: np.ndarray, rate: float, nonnegative: bool):
    """Least-squares (amplitude, floor) at a fixed rate, with their squared error"""
    e = np.exp(-rate * s)
    (amplitude, floor), *_ = np.linalg.lstsq(np.column_stack([e, np.ones_like(e)]), v, rcond=None)
    if nonnegative and floor < 0.0:
        amplitude, floor = float(np.dot(e, v) / np.dot(e, e)), 0.0
    sse = float(np.sum((amplitude * e + floor - v) ** 2))
    return float(amplitude), float(floor), sse


def _seed_rate(s: np.ndarray, v: np.ndarray, nonnegative: bool) -> float:
    """Rate minimising the projected error, scanned on a log grid and refined in between"""
    span = max(float(s[-1]), 1e-300)
    grid = np.geomspace(1e-3 / span, 1e3 / span, DECAY_SCAN_SIZE)
    errors = [_project(s, v, rate, nonnegative)[2] for rate in grid]
    i = int(np.argmin(errors))
    lo, hi = np.log(grid[max(i - 1, 0)]), np.log(grid[min(i + 1, grid.size - 1)])
    if hi <= lo:
        return float(grid[i])
    refined = minimize_scalar(
        lambda x: _project(s, v, float(np.exp(x)), nonnegative)[2],
        bounds=(lo, hi),
        method="bounded",
    )
    return float(np.exp(refined.x)) if refined.success else float(grid[i])


def _fit_residual(v: np.ndarray, fitted: np.ndarray) -> float:
    if np.all(v > 0.0) and np.all(fitted > 0.0):
        return float(np.sqrt(np.mean((np.log(v) - np.log(fitted)) ** 2)))
    return float(np.sqrt(np.mean((v - fitted) ** 2)) / np.max(np.abs(v)))


def fit_decay(
    times,
    values,
    window: Optional[tuple[float, float]] = None,
    nonnegative: Optional[bool] = None,
) -> DecayFit:
    """
    Fit v(t) = amplitude exp(-rate (t - t_a)) + floor, t_a the first sample in the window.

    The amplitude is signed, so rising series approaching their floor from below fit as
    well as falling ones. The rate is kept >= 0, and so is the floor when nonnegative
    holds (default: every value is >= 0, as for norms and distances). A rate scan with
    the linear parameters projected out seeds curve_fit.

    The residual is the root-mean-square log-ratio between series and fit when both
    stay positive, otherwise the root-mean-square error relative to max |v|.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise FitError(f"times and values differ in length: {t.size} vs {v.size}")
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, v = t[mask], v[mask]
    if t.size < MIN_FIT_SAMPLES:
        raise FitError(f"Decay fit needs at least {MIN_FIT_SAMPLES} samples, got {t.size}")
    if not np.all(np.isfinite(v)):
        raise FitError("Decay fit series has non-finite values")
    if nonnegative is None:
        nonnegative = bool(np.all(v >= 0.0))

    scale = max(float(np.max(np.abs(v))), 1e-300)
    if np.ptp(v) <= 1e-12 * scale:
        return DecayFit(rate=0.0, floor=float(np.mean(v)), amplitude=0.0, residual=0.0)

    s = t - t[0]
    rate0 = _seed_rate(s, v, nonnegative)
    amplitude0, floor0, _ = _project(s, v, rate0, nonnegative)
    p0 = (amplitude0, rate0, floor0)
    lower = (-np.inf, 0.0, 0.0 if nonnegative else -np.inf)
    try:
        popt, _ = curve_fit(
            _exp_floor,
            s,
            v,
            p0=p0,
            bounds=(lower, (np.inf, np.inf, np.inf)),
            maxfev=5000,
            ftol=1e-14,
            xtol=1e-14,
            gtol=1e-14,
        )
    except (RuntimeError, ValueError) as e:
        logger.warning(f"curve_fit failed ({e}); keeping the scanned estimate")
        popt = np.array(p0)
    if not np.all(np.isfinite(popt)):
        raise FitError(f"Decay fit produced non-finite parameters {popt.tolist()}")
    amplitude, rate, floor = (float(x) for x in popt)

    residual = _fit_residual(v, _exp_floor(s, amplitude, rate, floor))
    return DecayFit(rate=rate, floor=floor, amplitude=amplitude, residual=residual)


def absorbing_radius(
    traj: TrajectoryRecord,
    quantity: str = "energy",
    tail_fraction: float = 0.25,
    tol: float = 0.05,
) -> AbsorbingRadius:
    """
    R_star is the maximum of the quantity over the trailing tail_fraction of samples;
    t_entry is the first sample time after which it never exceeds R_star + tol |R_star|.

    Raises NonDissipativeError when the tail still climbs above the preceding window.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    values = traj.column(quantity)
    times = np.asarray(traj.times)
    if values.size < 2:
        raise FitError("absorbing_radius needs at least two samples")
    n_tail = max(1, int(np.ceil(tail_fraction * values.size)))
    tail = values[-n_tail:]
    r_star = float(np.max(tail))

    preceding = values[max(0, values.size - 2 * n_tail) : values.size - n_tail]
    previous = float(np.max(preceding)) if preceding.size else r_star
    if r_star > previous + tol * abs(previous) + 1e-12:
        raise NonDissipativeError(
            f"'{quantity}' still grows in the tail: {r_star:.6g} against "
            f"{previous:.6g} before"
        )

    above = np.nonzero(values > r_star + tol * abs(r_star))[0]
    t_entry = float(times[0]) if above.size == 0 else float(times[above[-1] + 1])
    return AbsorbingRadius(R_star=r_star, t_entry=t_entry, quantity=quantity)


def _pair_walk(
    spec: ModelSpec,
    phi1: InitialData,
    phi2: InitialData,
    cfg: IntegratorConfig,
    on_step: Optional[Callable[[HistorySegment, HistorySegment], None]] = None,
) -> Iterator[tuple[float, HistorySegment, HistorySegment]]:
    """Co-integrate two trajectories, yielding both histories at every recorded step"""
    h1 = initial_history(spec, phi1, cfg)
    h2 = initial_history(spec, phi2, cfg)
    if h1.size != h2.size or abs(h1.t_now - h2.t_now) > 1e-12:
        raise ValueError("Paired initial data must share the time grid")
    t0 = h1.t_now
    if on_step is not None:
        on_step(h1, h2)
    yield t0, h1, h2
    for n in range(1, cfg.n_steps + 1):
        t_new = t0 + n * cfg.dt
        for h in (h1, h2):
            u_new, udot_new = step(spec, h, cfg, t_new=t_new)
            h.push(u_new, udot_new)
        if on_step is not None:
            on_step(h1, h2)
        if n % cfg.record_every == 0:
            yield t_new, h1, h2


def _fit_separation_constants(
    report: SeparationReport, lambda_1: float
) -> tuple[float, float]:
    """Smallest C over a rate grid with cl_dist <= C (e^{-rate t} init + weak)"""
    t = np.asarray(report.times) - report.times[0]
    dist = np.asarray(report.cl_dist)
    weak = np.asarray(report.weak_term)
    best_c, best_rate = 0.0, 0.0
    if not np.any(dist > 0.0):
        return best_c, best_rate
    best_c = np.inf
    for rate in np.linspace(0.1 * lambda_1, 2.0 * lambda_1, RATE_GRID_SIZE):
        bound = np.exp(-rate * t) * report.initial_distance + weak
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(dist > 0.0, dist / bound, 0.0)
        c = float(np.max(ratios))
        if c <= best_c:
            best_c, best_rate = c, float(rate)
    return best_c, best_rate


def _log_decay_rate(times: np.ndarray, values: np.ndarray, t_from: float) -> float:
    mask = (times >= t_from) & (values > 1e-300)
    if np.count_nonzero(mask) < 2:
        return 0.0
    slope, _ = np.polyfit(times[mask], np.log(values[mask]), 1)
    return -float(slope)


def pair_separation(
    spec: ModelSpec,
    phi1: InitialData,
    phi2: InitialData,
    cfg: IntegratorConfig,
    beta: float = 0.5,
) -> SeparationReport:
    """
    Quasi-stability analysis of two co-integrated trajectories.

    weak_term is the running maximum of ||A^{1/2 - beta}(u1 - u2)|| over every step
    (not only recorded ones); sup_dist_H the running maximum of ||u1 - u2||.
    """
    s = spec.spectrum
    report = SeparationReport()
    running = {"weak": 0.0, "sup": 0.0}

    def _track(h1: HistorySegment, h2: HistorySegment) -> None:
        z = h1.coeffs(-1) - h2.coeffs(-1)
        running["weak"] = max(running["weak"], frac_norm_coeffs(z, 0.5 - beta, s))
        running["sup"] = max(running["sup"], frac_norm_coeffs(z, 0.0, s))

    for t, h1, h2 in _pair_walk(spec, phi1, phi2, cfg, on_step=_track):
        diff = segment_difference(h1, h2)
        if not report.times:
            report.initial_distance = frac_norm_coeffs(diff.coeffs(-1), 0.5, s) + c_norm(diff)
        report.times.append(t)
        report.cl_dist.append(cl_norm(diff, s))
        report.weak_term.append(running["weak"])
        report.sup_dist_H.append(running["sup"])

    report.fitted_C, report.fitted_rate = _fit_separation_constants(report, s.lambda_1)
    report.decay_rate = _log_decay_rate(
        np.asarray(report.times), np.asarray(report.cl_dist), report.times[0] + spec.r
    )
    logger.debug(
        f"Pair separation: C={report.fitted_C:.4g}, rate={report.fitted_rate:.4g}, "
        f"decay={report.decay_rate:.4g}"
    )
    return report


def dependence_scaling(
    spec: ModelSpec,
    phi: Callable[[float], SpectralState],
    direction: Callable[[float], SpectralState],
    deltas: list[float],
    cfg: IntegratorConfig,
    smoothing_time: Optional[float] = None,
) -> dict:
    """
    Perturb phi by delta * direction (direction scaled to unit C-norm) and measure how
    the separation scales with delta.

    Returns the log-log slopes of sup_t ||u1 - u2|| (continuous dependence) and of
    (t - r)^{1/2} ||A^{1/2}(u1 - u2)(t)|| at t = smoothing_time [2r] (Hoelder smoothing).
    """
    if len(deltas) < 2:
        raise FitError("dependence_scaling needs at least two perturbation sizes")
    s = spec.spectrum
    smoothing_time = 2.0 * spec.r if smoothing_time is None else smoothing_time
    if smoothing_time > cfg.T_final + 1e-12:
        raise FitError(f"smoothing_time={smoothing_time} is beyond T_final={cfg.T_final}")
    unit = c_norm(initial_history(spec, direction, cfg))
    if unit == 0.0:
        raise ValueError("Perturbation direction vanishes on the initial segment")

    sup_dist, smoothing = [], []
    for delta in deltas:
        scale = delta / unit

        def phi2(theta, scale=scale):
            return SpectralState(
                phi(theta).padded(spec.m) + scale * direction(theta).padded(spec.m), theta
            )

        running = {"sup": 0.0, "smoothing": None}

        def _track(h1: HistorySegment, h2: HistorySegment) -> None:
            z = h1.coeffs(-1) - h2.coeffs(-1)
            running["sup"] = max(running["sup"], frac_norm_coeffs(z, 0.0, s))
            if running["smoothing"] is None and h1.t_now >= smoothing_time - 1e-12:
                lag = np.sqrt(max(h1.t_now - spec.r, 0.0))
                running["smoothing"] = lag * frac_norm_coeffs(z, 0.5, s)

        for _ in _pair_walk(spec, phi, phi2, cfg, on_step=_track):
            pass
        sup_dist.append(running["sup"])
        smoothing.append(running["smoothing"])

    log_delta = np.log(np.asarray(deltas, dtype=float))
    slope_sup, _ = np.polyfit(log_delta, np.log(np.maximum(sup_dist, 1e-300)), 1)
    slope_holder, _ = np.polyfit(log_delta, np.log(np.maximum(smoothing, 1e-300)), 1)
    return {
        "deltas": list(map(float, deltas)),
        "sup_dist_H": list(map(float, sup_dist)),
        "smoothing_term": list(map(float, smoothing)),
        "smoothing_time": float(smoothing_time),
        "slope_sup_dist": float(slope_sup),
        "slope_smoothing": float(slope_holder),
    }


def almost_lipschitz_check(
    spec: ModelSpec, h1: HistorySegment, h2: HistorySegment
) -> tuple[float, float]:
    """
    (lhs, rhs) of ||F(phi) - F(psi)||_{-1/2} <= L_F (lambda_1^{-1/2} + L_eta K) |phi - psi|_C,
    K the larger discrete Lip(A^{-1/2} .) seminorm of the two segments.
    """
    s = spec.spectrum
    f1, _ = eval_F_coeffs(spec, h1)
    f2, _ = eval_F_coeffs(spec, h2)
    lhs = frac_norm_coeffs(f1 - f2, -0.5, s)
    K = max(lip_seminorm(h1, s), lip_seminorm(h2, s))
    factor = lipschitz_constant(spec.fmap, s) * (s.lambda_1**-0.5 + spec.eta.lipschitz * K)
    return lhs, factor * c_norm(segment_difference(h1, h2))


def lyapunov_sandwich(
    spec: ModelSpec, histories: list[HistorySegment], mu: float = DEFAULT_MU
) -> dict:
    """
    Constants of c0 [||A^{1/2}u||^2 + P] - c_lower <= V <= c1 [...] + mu int ||u'||^2 + c_upper
    fitted on the sampled histories, with P = max(Pi, 0).

    c_lower is the largest negative part of Pi seen, c0 the tightest lower slope given
    that offset and c1 the tightest upper slope. 'holds' compares them with the bounds
    the functional satisfies analytically: c0 >= 1/2 and c1 <= 1 + (1 + 1/lambda_1)/2.
    """
    if not histories:
        raise FitError("lyapunov_sandwich needs at least one history")
    s = spec.spectrum
    proxy, total, dissipation, negative = [], [], [], []
    for h in histories:
        u = h.coeffs(-1)
        potential = eval_Pi(spec.gterm, SpectralState(u), s.domain_length)
        proxy.append(frac_norm_coeffs(u, 0.5, s) ** 2 + max(potential, 0.0))
        total.append(lyapunov_V(spec, h, mu).total)
        dissipation.append(mu * derivative_l2(h) ** 2)
        negative.append(max(-potential, 0.0))
    proxy, total, dissipation = np.array(proxy), np.array(total), np.array(dissipation)

    c_lower = float(max(negative))
    active = proxy > 1e-300
    if not np.any(active):
        raise FitError("lyapunov_sandwich needs a sample with nonzero energy")
    c0 = float(np.min((total[active] + c_lower) / proxy[active]))
    c1 = float(np.max((total[active] - dissipation[active]) / proxy[active]))
    c_upper = float(max(np.max(total - dissipation - c1 * proxy), 0.0))

    c0_bound = 0.5
    c1_bound = 1.0 + 0.5 * (1.0 + 1.0 / s.lambda_1)
    scale = max(1.0, float(np.max(np.abs(total))))
    holds = (
        c0 >= c0_bound * (1.0 - 1e-9)
        and c1 <= c1_bound * (1.0 + 1e-9)
        and c_upper <= 1e-9 * scale
    )
    return {
        "c0": c0,
        "c1": c1,
        "c_lower": c_lower,
        "c_upper": c_upper,
        "c0_bound": c0_bound,
        "c1_bound": c1_bound,
        "holds": bool(holds),
    }
