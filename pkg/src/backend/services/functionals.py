"""The Lyapunov functional evaluated on a history segment"""

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from src.backend.models.errors import MissingDerivativeError
from src.backend.models.history_segment import HistorySegment
from src.backend.models.model_spec import ModelSpec
from src.backend.models.reports import LyapunovSample
from src.backend.models.spectrum import SpectralState
from src.backend.services.model_terms import eval_Pi

DEFAULT_MU = 0.25


def delay_compensator(h: HistorySegment, mu: float = DEFAULT_MU) -> float:
    """
    (mu / r) int_0^r int_{t-s}^t ||u'(xi)||^2 dxi ds on the uniform grid.

    The inner integral is accumulated backwards from t_now by the trapezoid rule,
    giving its value at s = 0, dt, ..., r; the outer integral is a trapezoid over s.
    """
    if not h.has_derivs:
        raise MissingDerivativeError("The delay compensator needs the derivative buffer")
    squares = np.sum(h.ordered_derivs() ** 2, axis=1)[::-1]
    inner = cumulative_trapezoid(squares, dx=h.dt, initial=0.0)
    return float(mu / h.r * trapezoid(inner, dx=h.dt))


def lyapunov_V(spec: ModelSpec, h: HistorySegment, mu: float = DEFAULT_MU) -> LyapunovSample:
    u = h.coeffs(-1)
    kinetic = 0.5 * float(np.sum(u * u) + np.sum(spec.spectrum.eigenvalues * u * u))
    potential = eval_Pi(spec.gterm, SpectralState(u), spec.spectrum.domain_length)
    return LyapunovSample(
        t=h.t_now,
        kinetic=kinetic,
        potential=potential,
        delay_compensator=delay_compensator(h, mu),
    )
