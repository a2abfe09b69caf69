from dataclasses import dataclass, field

import numpy as np

from src.backend.models.errors import InvalidDiscretizationError, SpectralDimensionError
from src.protocols.schemas import BasisKind


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of the positive operator A in its orthonormal eigenbasis"""

    eigenvalues: np.ndarray
    domain_length: float
    basis_kind: BasisKind = BasisKind.DIRICHLET_SINE

    def __post_init__(self):
        eigenvalues = _frozen_array(self.eigenvalues)
        if eigenvalues.size == 0:
            raise InvalidDiscretizationError("Spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(eigenvalues)) or eigenvalues[0] <= 0.0:
            raise InvalidDiscretizationError("Eigenvalues must be finite and positive")
        if np.any(np.diff(eigenvalues) < 0.0):
            raise InvalidDiscretizationError("Eigenvalues must be nondecreasing")
        if self.domain_length <= 0.0:
            raise InvalidDiscretizationError(
                f"Domain length must be positive, got {self.domain_length}"
            )
        object.__setattr__(self, "eigenvalues", eigenvalues)

    @property
    def m(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])

    def powers(self, alpha: float, m: int | None = None) -> np.ndarray:
        """lambda_k**alpha for the first m modes"""
        count = self.m if m is None else m
        if count > self.m:
            raise SpectralDimensionError(
                f"State of order {count} exceeds spectrum order {self.m}"
            )
        return self.eigenvalues[:count] ** alpha


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Galerkin coefficients u_k = <u, e_k> at a given time"""

    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        coeffs = _frozen_array(self.coeffs)
        if coeffs.size == 0:
            raise SpectralDimensionError("SpectralState needs at least one mode")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError(f"SpectralState at t={self.time} has non-finite entries")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "time", float(self.time))

    @property
    def m(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def zeros(cls, m: int, time: float = 0.0) -> "SpectralState":
        return cls(np.zeros(m), time)

    @classmethod
    def basis(cls, k: int, m: int, time: float = 0.0) -> "SpectralState":
        """The eigenvector e_k (1-based) in a Galerkin space of order m"""
        coeffs = np.zeros(m)
        coeffs[k - 1] = 1.0
        return cls(coeffs, time)

    def at(self, time: float) -> "SpectralState":
        return SpectralState(self.coeffs, time)

    def padded(self, m: int) -> np.ndarray:
        """Coefficients truncated or zero-padded to order m"""
        out = np.zeros(m)
        count = min(m, self.m)
        out[:count] = self.coeffs[:count]
        return out

    def __add__(self, other: "SpectralState") -> "SpectralState":
        return SpectralState(self.coeffs + other.coeffs, self.time)

    def __sub__(self, other: "SpectralState") -> "SpectralState":
        return SpectralState(self.coeffs - other.coeffs, self.time)

    def __mul__(self, scalar: float) -> "SpectralState":
        return SpectralState(scalar * self.coeffs, self.time)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class GridState:
    """Values of u at the collocation nodes x_j = j L / (m + 1), j = 1..m"""

    values: np.ndarray
    domain_length: float = np.pi

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def nodes(self) -> np.ndarray:
        return self.domain_length * np.arange(1, self.m + 1) / (self.m + 1)
