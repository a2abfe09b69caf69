from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from src.backend.models.errors import InvalidDiscretizationError
from src.backend.models.history_segment import HistorySegment
from src.protocols.schemas import Scheme

DIAG_COLUMNS = ["t", "norm_H", "norm_H12", "norm_dot_Hm12", "eta", "V_lyap", "cl_norm"]
MONITOR_COLUMNS = ["t", "energy", "dissipation_integral"]


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    T_final: float
    scheme: Scheme = Scheme.ETD_RK2
    record_every: int = 1
    store_states: bool = False

    def __post_init__(self):
        if self.dt <= 0.0:
            raise InvalidDiscretizationError(f"dt must be positive, got {self.dt}")
        if self.T_final < self.dt:
            raise InvalidDiscretizationError(
                f"T_final={self.T_final} is shorter than one step dt={self.dt}"
            )
        if self.record_every < 1:
            raise InvalidDiscretizationError("record_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))


@dataclass
class TrajectoryRecord:
    """Sampled diagnostics of one trajectory, plus the final history window"""

    times: list[float] = field(default_factory=list)
    diag: list[list[float]] = field(default_factory=list)
    monitors: list[list[float]] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    final_history: Optional[HistorySegment] = None
    step_index: int = 0
    dissipation_integral: float = 0.0

    def append(self, row: list[float], monitor: list[float], coeffs=None) -> None:
        if self.times and row[0] <= self.times[-1]:
            raise ValueError(f"Record times must increase, got {row[0]} after {self.times[-1]}")
        self.times.append(row[0])
        self.diag.append(row)
        self.monitors.append(monitor)
        if coeffs is not None:
            self.states.append(np.array(coeffs, dtype=float))

    def column(self, name: str) -> np.ndarray:
        if name in DIAG_COLUMNS:
            return np.array([row[DIAG_COLUMNS.index(name)] for row in self.diag])
        if name in MONITOR_COLUMNS:
            return np.array([row[MONITOR_COLUMNS.index(name)] for row in self.monitors])
        raise KeyError(f"Unknown trajectory column '{name}'")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.diag, columns=DIAG_COLUMNS)

    def monitors_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.monitors, columns=MONITOR_COLUMNS)

    def states_frame(self) -> pd.DataFrame:
        if not self.states:
            return pd.DataFrame(columns=["t"])
        m = self.states[0].size
        frame = pd.DataFrame(
            np.vstack(self.states), columns=[f"u_{k}" for k in range(1, m + 1)]
        )
        frame.insert(0, "t", self.times[: len(self.states)])
        return frame

    def extend(self, other: "TrajectoryRecord") -> "TrajectoryRecord":
        """Concatenate a continuation run recorded after this one"""
        merged = TrajectoryRecord(
            times=self.times + other.times,
            diag=self.diag + other.diag,
            monitors=self.monitors + other.monitors,
            states=self.states + other.states,
            final_history=other.final_history,
            step_index=other.step_index,
            dissipation_integral=other.dissipation_integral,
        )
        return merged
