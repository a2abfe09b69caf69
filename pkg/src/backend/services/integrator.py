"""
Exponential time differencing for the Galerkin system with state-dependent delay.

Per mode k the linear part -lambda_k u_k is integrated exactly; the remainder
N = h - F(u_t) - G(u) is frozen at t_now (etd1) or corrected once with N re-evaluated
at the predictor (etd_rk2). The delay term is explicit: since eta >= 0, u(t_now - eta)
is always in the stored history.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Iterable, Optional, Union

import numpy as np

from src.backend.models.errors import BlowUpError
from src.backend.models.history_segment import HistorySegment
from src.backend.models.model_spec import ModelSpec
from src.backend.models.spectrum import SpectralState, Spectrum
from src.backend.models.trajectory import IntegratorConfig, TrajectoryRecord
from src.backend.services.functionals import lyapunov_V
from src.backend.services.history import cl_norm, init_from_function
from src.backend.services.model_terms import eval_eta, rhs_coeffs
from src.backend.services.spectral_core import frac_norm_coeffs, project
from src.protocols.schemas import Scheme

logger = logging.getLogger(__name__)

PHI1_SWITCH = 1e-5
PHI2_SWITCH = 1e-3

InitialData = Union[Callable[[float], SpectralState], HistorySegment]


def phi1(z):
    """(e^z - 1) / z with its Taylor series near zero"""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) <= PHI1_SWITCH
    safe = np.where(small, 1.0, z)
    series = 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0
    out = np.where(small, series, np.expm1(safe) / safe)
    return float(out) if out.ndim == 0 else out


def phi2(z):
    """(e^z - 1 - z) / z^2 with its Taylor series near zero"""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) <= PHI2_SWITCH
    safe = np.where(small, 1.0, z)
    series = 0.5 + z / 6.0 + z * z / 24.0 + z**3 / 120.0
    out = np.where(small, series, (np.expm1(safe) - safe) / (safe * safe))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _etd_weights(spectrum: Spectrum, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    z = -spectrum.eigenvalues * dt
    return np.exp(z), dt * phi1(z), dt * phi2(z)


def _nonlinear(spec: ModelSpec, h: HistorySegment) -> np.ndarray:
    """N = h - F(u_t) - G(u) at t_now"""
    udot, _ = rhs_coeffs(spec, h)
    return udot + spec.spectrum.eigenvalues * h.coeffs(-1)


def _check_finite(values: np.ndarray, time: float) -> None:
    if not np.all(np.isfinite(values)):
        logger.error(f"Blow-up: non-finite state at t={time:.17g}")
        raise BlowUpError(time)


def step(
    spec: ModelSpec,
    h: HistorySegment,
    cfg: IntegratorConfig,
    t_new: Optional[float] = None,
) -> tuple[SpectralState, SpectralState]:
    """
    One step of the Galerkin delay system. Returns (u(t + dt), u'(t + dt)) with the
    derivative taken from the rhs at the new state. The history is left unchanged.
    """
    t_new = h.t_now + h.dt if t_new is None else t_new
    decay, w1, w2 = _etd_weights(spec.spectrum, h.dt)
    u = h.coeffs(-1)
    with np.errstate(over="ignore", invalid="ignore"):
        n_now = _nonlinear(spec, h)
        u_new = decay * u + w1 * n_now
        _check_finite(u_new, t_new)
        if cfg.scheme is Scheme.ETD_RK2:
            h.push(SpectralState(u_new, t_new))
            try:
                n_pred = _nonlinear(spec, h)
            finally:
                h.rollback()
            u_new = u_new + w2 * (n_pred - n_now)
            _check_finite(u_new, t_new)
        state = SpectralState(u_new, t_new)
        h.push(state)
        try:
            udot, _ = rhs_coeffs(spec, h)
        finally:
            h.rollback()
        _check_finite(udot, t_new)
    return state, SpectralState(udot, t_new)


def _record_row(
    spec: ModelSpec, h: HistorySegment, time: float, udot: np.ndarray
) -> tuple[list[float], float]:
    s = spec.spectrum
    u = h.coeffs(-1)
    norm_h12 = frac_norm_coeffs(u, 0.5, s)
    norm_dot = frac_norm_coeffs(udot, -0.5, s)
    row = [
        time,
        frac_norm_coeffs(u, 0.0, s),
        norm_h12,
        norm_dot,
        eval_eta(spec.eta, h),
        lyapunov_V(spec, h).total,
        cl_norm(h, s),
    ]
    return row, norm_dot**2 + norm_h12**2


def _dissipation_density(s: Spectrum, u: np.ndarray, udot: np.ndarray) -> float:
    return float(np.sum(udot * udot) + np.sum((s.eigenvalues * u) ** 2))


def initial_history(
    spec: ModelSpec, phi: InitialData, cfg: IntegratorConfig, start_step: int = 0
) -> HistorySegment:
    """Projected initial segment P_m phi on the integrator grid"""
    if isinstance(phi, HistorySegment):
        return phi.snapshot()
    return init_from_function(
        lambda theta: SpectralState(phi(theta).padded(spec.m), theta),
        spec.r,
        cfg.dt,
        spec.m,
        t_now=start_step * cfg.dt,
    )


def integrate(
    spec: ModelSpec,
    phi: InitialData,
    cfg: IntegratorConfig,
    start_step: int = 0,
    record_initial: bool = True,
    initial_integral: float = 0.0,
    on_record: Optional[Callable[[HistorySegment, float], None]] = None,
) -> TrajectoryRecord:
    """
    Integrate from t = start_step * dt over cfg.T_final, recording a diagnostics row
    every cfg.record_every steps. Times are computed as step * dt so continuation runs
    reproduce the same sample times.
    """
    h = initial_history(spec, phi, cfg, start_step)
    record = TrajectoryRecord(step_index=start_step)
    with np.errstate(over="ignore", invalid="ignore"):
        udot0, _ = rhs_coeffs(spec, h)
    _check_finite(udot0, h.t_now)
    udot = udot0 if start_step == 0 or not h.has_derivs else h.deriv_coeffs(-1)
    density = _dissipation_density(spec.spectrum, h.coeffs(-1), udot)
    integral = initial_integral

    def _record(time: float, current_udot: np.ndarray) -> None:
        row, energy = _record_row(spec, h, time, current_udot)
        record.append(
            row,
            [time, energy, integral],
            h.coeffs(-1) if cfg.store_states else None,
        )
        if on_record is not None:
            on_record(h, time)

    if record_initial:
        _record(start_step * cfg.dt, udot)

    for n in range(1, cfg.n_steps + 1):
        index = start_step + n
        t_new = index * cfg.dt
        try:
            u_new, udot_new = step(spec, h, cfg, t_new=t_new)
        except BlowUpError as e:
            if record.diag:
                e.last_diagnostics = dict(zip(record.to_frame().columns, record.diag[-1]))
            raise
        h.push(u_new, udot_new)
        new_density = _dissipation_density(spec.spectrum, u_new.coeffs, udot_new.coeffs)
        integral += 0.5 * cfg.dt * (density + new_density)
        density = new_density
        if index % cfg.record_every == 0:
            _record(t_new, udot_new.coeffs)

    record.final_history = h.snapshot()
    record.step_index = start_step + cfg.n_steps
    record.dissipation_integral = integral
    logger.debug(
        f"Integrated {cfg.n_steps} steps to t={record.step_index * cfg.dt:.6g} "
        f"({len(record.times)} samples)"
    )
    return record


def integrate_ensemble(
    spec: ModelSpec,
    initial_data: Iterable[InitialData],
    cfg: IntegratorConfig,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Independent trajectories sharing one immutable ModelSpec"""
    items = list(initial_data)
    if workers <= 1:
        return [integrate(spec, phi, cfg) for phi in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda phi: integrate(spec, phi, cfg), items))


def galerkin_refine(
    spec: ModelSpec,
    phi: Callable[[float], SpectralState],
    cfg: IntegratorConfig,
    m_list: list[int],
) -> list[dict]:
    """Errors of u^m(T) against the largest order in m_list, in H and H_{1/2}"""
    if list(m_list) != sorted(m_list) or len(set(m_list)) != len(m_list):
        raise ValueError(f"m_list must be strictly ascending, got {m_list}")
    m_max = m_list[-1]
    finals = {}
    for m in m_list:
        spec_m = spec.with_order(m)
        record = integrate(
            spec_m, lambda theta, m=m: project(phi(theta), m), cfg, record_initial=False
        )
        finals[m] = record.final_history.coeffs(-1)
        logger.info(f"Galerkin order m={m} integrated to T={cfg.T_final}")
    reference = finals[m_max]
    reference_spectrum = spec.with_order(m_max).spectrum
    table = []
    for m in m_list:
        padded = np.zeros(m_max)
        padded[:m] = finals[m]
        diff = padded - reference
        table.append(
            {
                "m": m,
                "error_H": frac_norm_coeffs(diff, 0.0, reference_spectrum),
                "error_H12": frac_norm_coeffs(diff, 0.5, reference_spectrum),
            }
        )
    return table
