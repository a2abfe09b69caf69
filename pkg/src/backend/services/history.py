"""
Operations on history segments: construction, advancing, delayed lookup, and the
phase-space norms.

The seminorms are discrete surrogates of their continuum definitions: Lipschitz and
Hoelder quotients are taken over grid pairs only, so they never exceed the continuum
values of the sampled function. Accuracy claims hold for histories with bounded
second differences.
"""

from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from src.backend.models.errors import (
    DelayRangeError,
    InvalidDiscretizationError,
    MissingDerivativeError,
    SpectralDimensionError,
)
from src.backend.models.history_segment import HistorySegment, steps_per_delay
from src.backend.models.spectrum import SpectralState, Spectrum

SNAP_TOL = 1e-9


def init_from_function(
    phi: Callable[[float], SpectralState],
    r: float,
    dt: float,
    m: int,
    t_now: float = 0.0,
) -> HistorySegment:
    """Sample phi on theta = -r, -r + dt, ..., 0 and difference it for the derivatives"""
    n_steps = steps_per_delay(r, dt)
    thetas = -(n_steps - np.arange(n_steps + 1)) * dt
    rows = []
    for theta in thetas:
        state = phi(float(theta))
        if state.m != m:
            raise SpectralDimensionError(
                f"Initial sampler returned {state.m} modes at theta={theta}, expected {m}"
            )
        rows.append(state.coeffs)
    states = np.vstack(rows)
    derivs = np.gradient(states, dt, axis=0, edge_order=2 if n_steps >= 2 else 1)
    return HistorySegment(states, r, dt, t_now, derivs=derivs)


def constant_history(
    u0: SpectralState, r: float, dt: float, t_now: float = 0.0
) -> HistorySegment:
    return init_from_function(lambda theta: u0, r, dt, u0.m, t_now)


def push(
    h: HistorySegment, u_new: SpectralState, udot_new: Optional[SpectralState] = None
) -> HistorySegment:
    return h.push(u_new, udot_new)


def sample_offset(h: HistorySegment, theta: float) -> np.ndarray:
    """Coefficients of u(t_now + theta), theta in [-r, 0], by linear interpolation"""
    tol = SNAP_TOL * h.dt
    if theta > tol or theta < -h.r - tol:
        raise DelayRangeError(
            f"Delayed lookup theta={theta:.17g} outside [-{h.r}, 0]; eta left its codomain"
        )
    position = h.n_steps + theta / h.dt
    nearest = round(position)
    if abs(position - nearest) < SNAP_TOL:
        return h.coeffs(int(min(max(nearest, 0), h.n_steps))).copy()
    lower = int(min(max(np.floor(position), 0), h.n_steps - 1))
    weight = position - lower
    return (1.0 - weight) * h.coeffs(lower) + weight * h.coeffs(lower + 1)


def sample(h: HistorySegment, t_query: float) -> SpectralState:
    """u(t_query) for t_now - r <= t_query <= t_now"""
    return SpectralState(sample_offset(h, t_query - h.t_now), t_query)


def c_norm(h: HistorySegment) -> float:
    return float(np.max(np.linalg.norm(h.ordered_states(), axis=1)))


def lip_seminorm(h: HistorySegment, s: Spectrum) -> float:
    """max over adjacent pairs of ||A^{-1/2}(u_{i+1} - u_i)|| / dt"""
    scaled = np.diff(h.ordered_states(), axis=0) * s.powers(-0.5, h.m)
    return float(np.max(np.linalg.norm(scaled, axis=1)) / h.dt)


def cl_norm(h: HistorySegment, s: Spectrum) -> float:
    """max ||phi|| + Lip(A^{-1/2} phi) + ||A^{1/2} phi(0)||"""
    top = float(np.linalg.norm(s.powers(0.5, h.m) * h.coeffs(-1)))
    return c_norm(h) + lip_seminorm(h, s) + top


def holder_seminorm(
    h: HistorySegment, alpha: float, beta: float, s: Spectrum, use_derivs: bool = False
) -> float:
    """max over grid pairs of ||A^{1-beta}(u(tau_i) - u(tau_j))|| / |tau_i - tau_j|^alpha"""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"Hoelder exponent must lie in (0, 1], got {alpha}")
    values = h.ordered_derivs() if use_derivs else h.ordered_states()
    exponent = -beta if use_derivs else 1.0 - beta
    scaled = values * s.powers(exponent, h.m)
    best = 0.0
    for lag in range(1, h.size):
        gaps = np.linalg.norm(scaled[lag:] - scaled[:-lag], axis=1)
        best = max(best, float(gaps.max()) / (lag * h.dt) ** alpha)
    return best


def derivative_l2(h: HistorySegment) -> float:
    """(integral over [-r, 0] of ||phi'||^2)^{1/2} by the trapezoid rule"""
    squares = np.sum(h.ordered_derivs() ** 2, axis=1)
    return float(np.sqrt(trapezoid(squares, dx=h.dt)))


def cl0_norm(h: HistorySegment, s: Spectrum) -> float:
    """Norm of the forward-invariant subspace with square-integrable derivative"""
    return cl_norm(h, s) + derivative_l2(h)


def segment_difference(h1: HistorySegment, h2: HistorySegment) -> HistorySegment:
    if h1.size != h2.size or h1.m != h2.m or abs(h1.dt - h2.dt) > 1e-15:
        raise SpectralDimensionError("History segments live on different grids")
    derivs = None
    if h1.has_derivs and h2.has_derivs:
        derivs = h1.ordered_derivs() - h2.ordered_derivs()
    return HistorySegment(
        h1.ordered_states() - h2.ordered_states(), h1.r, h1.dt, h1.t_now, derivs=derivs
    )


def x_distance(h1: HistorySegment, h2: HistorySegment, s: Spectrum) -> float:
    """Metric of the compatibility space: derivative in H_{-1/2}, values in H, top in H_{1/2}"""
    diff = segment_difference(h1, h2)
    if not diff.has_derivs:
        raise MissingDerivativeError("x_distance needs derivative buffers on both segments")
    weak = np.linalg.norm(diff.ordered_derivs() * s.powers(-0.5, diff.m), axis=1)
    strong = np.linalg.norm(diff.ordered_states(), axis=1)
    top = float(np.linalg.norm(s.powers(0.5, diff.m) * diff.coeffs(-1)))
    return float(np.max(weak + strong)) + top


def absorbing_set_quantity(
    h: HistorySegment, alpha: float, beta: float, s: Spectrum
) -> float:
    """
    Discrete value of the quantity that bounds the absorbing set D^R_{alpha,beta}:
    |A^{1-beta} phi|_C + |A^{-beta} phi'|_C + Hold_alpha of both
    + (integral of ||A^{1/2} phi||^2 + ||phi'||^2)^{1/2}.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not 0.0 < alpha < min(beta, 0.5):
        raise ValueError(f"alpha must lie in (0, min(beta, 1/2)), got {alpha}")
    states = h.ordered_states()
    derivs = h.ordered_derivs()
    strong = np.max(np.linalg.norm(states * s.powers(1.0 - beta, h.m), axis=1))
    weak = np.max(np.linalg.norm(derivs * s.powers(-beta, h.m), axis=1))
    holder = holder_seminorm(h, alpha, beta, s) + holder_seminorm(
        h, alpha, beta, s, use_derivs=True
    )
    density = np.sum((states * s.powers(0.5, h.m)) ** 2, axis=1) + np.sum(
        derivs**2, axis=1
    )
    return float(strong + weak + holder + np.sqrt(trapezoid(density, dx=h.dt)))


def to_frame(h: HistorySegment) -> pd.DataFrame:
    """Flat row-per-time snapshot: t, theta, u_1..u_m[, du_1..du_m]"""
    columns = {"t": h.times, "theta": h.times - h.t_now}
    states = h.ordered_states()
    for k in range(h.m):
        columns[f"u_{k + 1}"] = states[:, k]
    if h.has_derivs:
        derivs = h.ordered_derivs()
        for k in range(h.m):
            columns[f"du_{k + 1}"] = derivs[:, k]
    return pd.DataFrame(columns)


def from_frame(frame: pd.DataFrame, r: float, dt: float, t_now: float) -> HistorySegment:
    """Rebuild the segment ending at t_now from the trailing N + 1 rows of a snapshot"""
    n_steps = steps_per_delay(r, dt)
    state_cols = [c for c in frame.columns if c.startswith("u_")]
    deriv_cols = [c for c in frame.columns if c.startswith("du_")]
    if len(frame) < n_steps + 1:
        raise InvalidDiscretizationError(
            f"State dump holds {len(frame)} rows but the delay window needs {n_steps + 1}"
        )
    tail = frame.iloc[-(n_steps + 1) :]
    span = float(tail["t"].iloc[-1] - tail["t"].iloc[0])
    if abs(span - r) > 1e-9 * max(1.0, r):
        raise InvalidDiscretizationError(
            f"State dump spans {span:.12g} time units, the delay window is r={r}"
        )
    derivs = tail[deriv_cols].to_numpy() if deriv_cols else None
    return HistorySegment(tail[state_cols].to_numpy(), r, dt, t_now, derivs=derivs)
