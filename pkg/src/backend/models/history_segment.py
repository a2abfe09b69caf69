from typing import Optional

import numpy as np

from src.backend.models.errors import (
    HistoryTimeError,
    InvalidDiscretizationError,
    MissingDerivativeError,
    SpectralDimensionError,
)
from src.backend.models.spectrum import SpectralState

DIVISIBILITY_TOL = 1e-9
TIME_TOL = 1e-12


def steps_per_delay(r: float, dt: float) -> int:
    """Number N of grid steps with N * dt = r; rejects non-divisible pairs"""
    if r <= 0.0:
        raise InvalidDiscretizationError(f"Delay horizon r must be positive, got {r}")
    if dt <= 0.0:
        raise InvalidDiscretizationError(f"Time step dt must be positive, got {dt}")
    ratio = r / dt
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > DIVISIBILITY_TOL:
        raise InvalidDiscretizationError(
            f"dt={dt} does not divide r={r} (r/dt={ratio:.12g})"
        )
    return count


class HistorySegment:
    """
    Uniform-grid ring buffer holding the history u_t on [t_now - r, t_now].

    Entries are kept at tau_i = t_now - (N - i) dt for i = 0..N. Pushing drops the
    oldest entry in O(m); the single most recent push can be undone with rollback,
    which is how provisional states are evaluated without copying the buffer.
    """

    def __init__(
        self,
        states: np.ndarray,
        r: float,
        dt: float,
        t_now: float,
        derivs: Optional[np.ndarray] = None,
    ):
        self.n_steps = steps_per_delay(r, dt)
        states = np.array(states, dtype=float)
        if states.ndim != 2 or states.shape[0] != self.n_steps + 1:
            raise SpectralDimensionError(
                f"History needs {self.n_steps + 1} rows of coefficients, got shape {states.shape}"
            )
        if derivs is not None:
            derivs = np.array(derivs, dtype=float)
            if derivs.shape != states.shape:
                raise SpectralDimensionError(
                    f"Derivative buffer shape {derivs.shape} differs from states {states.shape}"
                )
        self.r = float(r)
        self.dt = float(dt)
        self._states = states
        self._derivs = derivs
        self._head = 0
        self._t_origin = float(t_now)
        self._pushes = 0
        self._undo = None

    @property
    def m(self) -> int:
        return int(self._states.shape[1])

    @property
    def size(self) -> int:
        return self.n_steps + 1

    @property
    def t_now(self) -> float:
        return self._t_origin + self._pushes * self.dt

    @property
    def has_derivs(self) -> bool:
        return self._derivs is not None

    @property
    def times(self) -> np.ndarray:
        return self.t_now - (self.n_steps - np.arange(self.size)) * self.dt

    def _slot(self, index: int) -> int:
        if index < 0:
            index += self.size
        if not 0 <= index < self.size:
            raise IndexError(f"History index {index} out of range")
        return (self._head + index) % self.size

    def coeffs(self, index: int) -> np.ndarray:
        """Chronological index 0 (oldest) .. N (newest); returns a view"""
        return self._states[self._slot(index)]

    def deriv_coeffs(self, index: int) -> np.ndarray:
        if self._derivs is None:
            raise MissingDerivativeError("History segment carries no derivative buffer")
        return self._derivs[self._slot(index)]

    def state(self, index: int) -> SpectralState:
        return SpectralState(self.coeffs(index), float(self.times[index]))

    @property
    def newest(self) -> SpectralState:
        return self.state(-1)

    def ordered_states(self) -> np.ndarray:
        return np.roll(self._states, -self._head, axis=0)

    def ordered_derivs(self) -> np.ndarray:
        if self._derivs is None:
            raise MissingDerivativeError("History segment carries no derivative buffer")
        return np.roll(self._derivs, -self._head, axis=0)

    def push(
        self, u_new: SpectralState, udot_new: Optional[SpectralState] = None
    ) -> "HistorySegment":
        """Append the state at t_now + dt and drop the oldest entry"""
        expected = self.t_now + self.dt
        if abs(u_new.time - expected) > TIME_TOL * max(1.0, abs(expected)):
            raise HistoryTimeError(
                f"Pushed state at t={u_new.time:.17g}, expected t={expected:.17g}"
            )
        if u_new.m != self.m:
            raise SpectralDimensionError(
                f"Pushed state has {u_new.m} modes, history has {self.m}"
            )
        slot = self._head
        old_deriv = None if self._derivs is None else self._derivs[slot].copy()
        self._undo = (slot, self._states[slot].copy(), old_deriv)
        self._states[slot] = u_new.coeffs
        if self._derivs is not None:
            self._derivs[slot] = 0.0 if udot_new is None else udot_new.coeffs
        self._head = (self._head + 1) % self.size
        self._pushes += 1
        return self

    def set_newest_derivative(self, udot: SpectralState) -> None:
        if self._derivs is None:
            raise MissingDerivativeError("History segment carries no derivative buffer")
        self._derivs[self._slot(-1)] = udot.coeffs

    def rollback(self) -> "HistorySegment":
        """Undo the most recent push"""
        if self._undo is None:
            raise RuntimeError("No push to roll back")
        slot, state, deriv = self._undo
        self._states[slot] = state
        if self._derivs is not None:
            self._derivs[slot] = deriv
        self._head = slot
        self._pushes -= 1
        self._undo = None
        return self

    def snapshot(self) -> "HistorySegment":
        """Deep copy in chronological order, safe to share read-only"""
        derivs = None if self._derivs is None else self.ordered_derivs()
        return HistorySegment(
            self.ordered_states(), self.r, self.dt, self.t_now, derivs=derivs
        )
