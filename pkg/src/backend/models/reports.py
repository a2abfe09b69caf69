from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    kinetic: float
    potential: float
    delay_compensator: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential + self.delay_compensator


@dataclass(frozen=True)
class DecayFit:
    """v(t) ~ amplitude exp(-rate t) + floor"""

    rate: float
    floor: float
    amplitude: float
    residual: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AbsorbingRadius:
    R_star: float
    t_entry: float
    quantity: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SeparationReport:
    """Difference of two co-integrated trajectories in the quasi-stability form"""

    times: list[float] = field(default_factory=list)
    cl_dist: list[float] = field(default_factory=list)
    weak_term: list[float] = field(default_factory=list)
    sup_dist_H: list[float] = field(default_factory=list)
    initial_distance: float = 0.0
    fitted_C: float = 0.0
    fitted_rate: float = 0.0
    decay_rate: float = 0.0

    def summary(self) -> dict:
        return {
            "initial_distance": self.initial_distance,
            "fitted_C": self.fitted_C,
            "fitted_rate": self.fitted_rate,
            "decay_rate": self.decay_rate,
            "max_cl_dist": max(self.cl_dist, default=0.0),
            "max_weak_term": max(self.weak_term, default=0.0),
        }
