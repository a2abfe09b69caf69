"""
Dirichlet sine eigenbasis of A = -d^2/dx^2 on (0, L).

Normalization: e_k(x) = sqrt(2/L) sin(k pi x / L), so ||e_k||_{L^2} = 1 and the
spectral coefficients are H-inner products. Grid values live at the interior nodes
x_j = j L / (m + 1), j = 1..m, and the pair

    to_grid:   v_j = sum_k u_k e_k(x_j)
    from_grid: u_k = (L / (m + 1)) sum_j v_j e_k(x_j)

is exactly inverse (discrete sine orthogonality). The second formula is the nodal
quadrature with weight L / (m + 1), so sum_k u_k w_k = (L / (m + 1)) sum_j u(x_j) w(x_j).
Both directions are type-I DSTs computed with scipy.fft.
"""

import numpy as np
from scipy.fft import dst

from src.backend.models.errors import InvalidDiscretizationError, SpectralDimensionError
from src.backend.models.spectrum import GridState, SpectralState, Spectrum
from src.protocols.schemas import BasisKind


def build_dirichlet_spectrum(m: int, L: float = np.pi) -> Spectrum:
    """lambda_k = (k pi / L)^2 for k = 1..m"""
    if int(m) != m or m < 1:
        raise InvalidDiscretizationError(f"Mode count must be a positive integer, got {m}")
    if L <= 0.0:
        raise InvalidDiscretizationError(f"Domain length must be positive, got {L}")
    k = np.arange(1, int(m) + 1, dtype=float)
    return Spectrum((k * np.pi / L) ** 2, float(L), BasisKind.DIRICHLET_SINE)


def _check_order(u: SpectralState, s: Spectrum) -> None:
    if u.m > s.m:
        raise SpectralDimensionError(
            f"State of order {u.m} does not fit spectrum of order {s.m}"
        )


def frac_norm(u: SpectralState, alpha: float, s: Spectrum) -> float:
    """||A^alpha u|| = (sum_k lambda_k^(2 alpha) u_k^2)^(1/2)"""
    _check_order(u, s)
    return float(np.linalg.norm(s.powers(alpha, u.m) * u.coeffs))


def frac_norm_coeffs(coeffs: np.ndarray, alpha: float, s: Spectrum) -> float:
    """frac_norm on a raw coefficient vector (hot path of the integrator)"""
    return float(np.linalg.norm(s.powers(alpha, coeffs.shape[-1]) * coeffs))


def apply_A_power(u: SpectralState, alpha: float, s: Spectrum) -> SpectralState:
    _check_order(u, s)
    return SpectralState(s.powers(alpha, u.m) * u.coeffs, u.time)


def project(u: SpectralState, m_target: int) -> SpectralState:
    """P_m: keep the first m_target coefficients"""
    if m_target < 1:
        raise InvalidDiscretizationError(f"Projection order must be >= 1, got {m_target}")
    return SpectralState(u.coeffs[: min(u.m, m_target)], u.time)


def grid_weight(m: int, L: float) -> float:
    return L / (m + 1)


def to_grid_coeffs(coeffs: np.ndarray, L: float) -> np.ndarray:
    # scipy's DST-I carries a factor 2: y_j = 2 sum_k x_k sin(pi (j+1)(k+1) / (m+1))
    return np.sqrt(2.0 / L) * 0.5 * dst(coeffs, type=1, axis=-1)


def from_grid_values(values: np.ndarray, L: float) -> np.ndarray:
    m = values.shape[-1]
    return np.sqrt(2.0 / L) * 0.5 * grid_weight(m, L) * dst(values, type=1, axis=-1)


def to_grid(u: SpectralState, L: float = np.pi) -> GridState:
    return GridState(to_grid_coeffs(u.coeffs, L), L)


def from_grid(v: GridState, time: float = 0.0) -> SpectralState:
    return SpectralState(from_grid_values(v.values, v.domain_length), time)


def inner(u: SpectralState, v: SpectralState) -> float:
    """L^2(0, L) inner product of two Galerkin states"""
    m = max(u.m, v.m)
    return float(np.dot(u.padded(m), v.padded(m)))


def grid_inner(u: GridState, v: GridState) -> float:
    """Nodal quadrature of the L^2 inner product"""
    return grid_weight(u.m, u.domain_length) * float(np.dot(u.values, v.values))
