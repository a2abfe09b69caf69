"""Evaluation of the right-hand side terms eta, F, G, Pi and their checkable constants"""

import numpy as np
from scipy.optimize import brentq

from src.backend.models.errors import MissingDerivativeError
from src.backend.models.history_segment import HistorySegment
from src.backend.models.model_spec import (
    DelayedMap,
    DelayFunctional,
    ModelSpec,
    Nonlinearity,
)
from src.backend.models.spectrum import SpectralState, Spectrum
from src.backend.services.history import sample_offset
from src.backend.services.spectral_core import (
    from_grid_values,
    grid_weight,
    to_grid_coeffs,
)
from src.protocols.schemas import BirthKind, DelayKind, SmoothingKind


def eta_of_coeffs(eta: DelayFunctional, u: np.ndarray) -> float:
    if eta.kind is DelayKind.CONSTANT:
        value = eta.tau0
    elif eta.kind is DelayKind.TANH_OF_INNER:
        w = np.zeros(u.size)
        count = min(u.size, eta.w.size)
        w[:count] = eta.w[:count]
        value = 0.5 * eta.r * (1.0 + np.tanh(eta.kappa * float(np.dot(u, w))))
    else:
        s = eta.kappa * float(np.linalg.norm(u))
        value = eta.r * s / (1.0 + s)
    if not np.isfinite(value):
        # overflowed states saturate the delay
        value = eta.r
    return float(min(max(value, 0.0), eta.r))


def eval_eta(eta: DelayFunctional, h: HistorySegment) -> float:
    """Delay value in [0, r]; the built-in kinds read u(t_now) only"""
    return eta_of_coeffs(eta, h.coeffs(-1))


def apply_F0(fmap: DelayedMap, v: np.ndarray, L: float) -> np.ndarray:
    """F_0(v) = from_grid(b(to_grid(B v)))"""
    smoothed = fmap.B.multipliers(v.size) * v
    return from_grid_values(fmap.b(to_grid_coeffs(smoothed, L)), L)


def eval_F_coeffs(spec: ModelSpec, h: HistorySegment) -> tuple[np.ndarray, float]:
    tau = eval_eta(spec.eta, h)
    delayed = sample_offset(h, -tau)
    return apply_F0(spec.fmap, delayed, spec.spectrum.domain_length), tau


def eval_F(spec: ModelSpec, h: HistorySegment) -> SpectralState:
    """F(u_t) = F_0(u(t_now - eta(u_t)))"""
    values, _ = eval_F_coeffs(spec, h)
    return SpectralState(values, h.t_now)


def linear_growth_mF(fmap: DelayedMap, m: int | None = None) -> float:
    """limsup ||F_0(u)|| / ||u||; zero for the bounded birth maps"""
    if fmap.b.bounded:
        return 0.0
    if fmap.B.kind is SmoothingKind.DIAG:
        return abs(fmap.b.slope) * float(np.max(np.abs(fmap.B.sigma)))
    return abs(fmap.b.slope)


def lipschitz_constant(fmap: DelayedMap, spectrum: Spectrum) -> float:
    """
    L_F valid in both H and H_{-1/2} on the Galerkin space of order m.

    In H the Nemytskii map inherits L_b and B contributes max |sigma_k|. In H_{-1/2}
    the bound picks up max_k |sigma_k| (lambda_k / lambda_1)^{1/2}, which stays
    m-independent only when B smooths.
    """
    sigma = np.abs(fmap.B.multipliers(spectrum.m))
    in_h = fmap.b.lipschitz * float(np.max(sigma))
    ratio = np.sqrt(spectrum.eigenvalues / spectrum.lambda_1)
    in_weak = fmap.b.lipschitz * float(np.max(sigma * ratio))
    return max(in_h, in_weak)


def eval_G_coeffs(gterm: Nonlinearity, u: np.ndarray, L: float) -> np.ndarray:
    return from_grid_values(gterm.g(to_grid_coeffs(u, L)), L)


def eval_G(gterm: Nonlinearity, u: SpectralState, L: float) -> SpectralState:
    """Pseudo-spectral Nemytskii operator of g"""
    return SpectralState(eval_G_coeffs(gterm, u.coeffs, L), u.time)


def eval_Pi(gterm: Nonlinearity, u: SpectralState, L: float) -> float:
    """Potential of G by nodal quadrature with weight L / (m + 1)"""
    values = to_grid_coeffs(u.coeffs, L)
    return grid_weight(u.m, L) * float(np.sum(gterm.density(values)))


def rhs_coeffs(spec: ModelSpec, h: HistorySegment) -> tuple[np.ndarray, float]:
    """u' = h - A u - F(u_t) - G(u) at t_now, together with the delay used"""
    u = h.coeffs(-1)
    L = spec.spectrum.domain_length
    f_values, tau = eval_F_coeffs(spec, h)
    g_values = eval_G_coeffs(spec.gterm, u, L)
    return spec.h.coeffs - spec.spectrum.eigenvalues * u - f_values - g_values, tau


def rhs(spec: ModelSpec, h: HistorySegment) -> SpectralState:
    values, _ = rhs_coeffs(spec, h)
    return SpectralState(values, h.t_now)


def compatibility_residual(spec: ModelSpec, h: HistorySegment) -> float:
    """||phi'(0) + A phi(0) + F(phi) + G(phi(0)) - h||_{-1/2} (h omitted when configured)"""
    if not h.has_derivs:
        raise MissingDerivativeError("compatibility_residual needs the derivative buffer")
    u = h.coeffs(-1)
    L = spec.spectrum.domain_length
    f_values, _ = eval_F_coeffs(spec, h)
    residual = (
        h.deriv_coeffs(-1)
        + spec.spectrum.eigenvalues * u
        + f_values
        + eval_G_coeffs(spec.gterm, u, L)
    )
    if spec.x_space_includes_h:
        residual = residual - spec.h.coeffs
    return float(np.linalg.norm(spec.spectrum.powers(-0.5) * residual))


def random_states(
    rng: np.random.Generator, n: int, m: int, scale: float = 1.0
) -> np.ndarray:
    """Random coefficient rows with 1/k decay"""
    return scale * rng.standard_normal((n, m)) / np.arange(1, m + 1)


def fit_dissipativity_constants(
    gterm: Nonlinearity,
    spectrum: Spectrum,
    rng: np.random.Generator,
    n_samples: int = 1000,
    scale: float = 1.0,
) -> tuple[float, float]:
    """
    Constants (c1, c2) with <G(u), A u> >= -c1 ||A^{1/2} u||^2 - c2 on a random sample.

    c1 comes from the least-squares slope of <G(u), Au> against ||A^{1/2}u||^2, floored by
    the continuum bound max(0, -min g'); c2 is twice the worst remaining violation.
    """
    rows = random_states(rng, n_samples, spectrum.m, scale)
    x, y = _dissipativity_pairs(gterm, spectrum, rows)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, _), *_ = np.linalg.lstsq(design, y, rcond=None)
    analytic = -gterm.min_slope if np.isfinite(gterm.min_slope) else 0.0
    c1 = max(0.0, -float(slope), analytic)
    violation = float(np.max(-y - c1 * x))
    c2 = 2.0 * max(violation, 0.0) + 1e-12
    return c1, c2


def check_dissipativity(
    gterm: Nonlinearity,
    spectrum: Spectrum,
    c1: float,
    c2: float,
    rng: np.random.Generator,
    n_samples: int = 1000,
    scale: float = 1.0,
) -> bool:
    rows = random_states(rng, n_samples, spectrum.m, scale)
    x, y = _dissipativity_pairs(gterm, spectrum, rows)
    return bool(np.all(y >= -c1 * x - c2))


def _dissipativity_pairs(
    gterm: Nonlinearity, spectrum: Spectrum, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    L = spectrum.domain_length
    lam = spectrum.eigenvalues
    g_rows = from_grid_values(gterm.g(to_grid_coeffs(rows, L)), L)
    y = np.sum(g_rows * lam * rows, axis=1)
    x = np.sum(lam * rows**2, axis=1)
    return x, y


def mode_residual(spec: ModelSpec, c: float) -> float:
    """First component of the rhs for the constant one-mode history c e_1"""
    u = np.zeros(spec.m)
    u[0] = c
    L = spec.spectrum.domain_length
    value = (
        spec.h.coeffs
        - spec.spectrum.eigenvalues * u
        - apply_F0(spec.fmap, u, L)
        - eval_G_coeffs(spec.gterm, u, L)
    )
    return float(value[0])


def find_mode_equilibria(
    spec: ModelSpec, bracket: tuple[float, float] = (-10.0, 10.0), n_grid: int = 4001
) -> list[float]:
    """Roots of the one-mode residual by sign-change scanning refined with brentq"""
    grid = np.linspace(bracket[0], bracket[1], n_grid)
    values = np.array([mode_residual(spec, c) for c in grid])
    roots = []
    for i in range(n_grid - 1):
        if values[i] == 0.0:
            roots.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0.0:
            roots.append(
                float(brentq(lambda c: mode_residual(spec, c), grid[i], grid[i + 1], xtol=1e-14))
            )
    return roots


def describe(spec: ModelSpec) -> dict:
    """Scalar constants of the model reported alongside experiment artifacts"""
    m_F = linear_growth_mF(spec.fmap)
    return {
        "m": spec.m,
        "L": spec.spectrum.domain_length,
        "r": spec.r,
        "lambda_1": spec.spectrum.lambda_1,
        "L_eta": spec.eta.lipschitz,
        "L_F": lipschitz_constant(spec.fmap, spec.spectrum),
        "m_F": m_F,
        "m_F_times_r": m_F * spec.r,
        "birth_kind": spec.fmap.b.kind.value,
        "smoothing_kind": spec.fmap.B.kind.value,
        "verified_hypotheses": spec.verified_hypotheses,
    }
