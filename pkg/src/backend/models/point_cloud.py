from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] < 1:
            raise ValueError(f"PointCloud needs a nonempty (n, d) array, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValueError("PointCloud has non-finite entries")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def diameter_bound(self) -> float:
        """Diagonal of the bounding box"""
        return float(np.linalg.norm(self.points.max(axis=0) - self.points.min(axis=0)))


@dataclass(frozen=True)
class DimensionEstimate:
    epsilons: list[float]
    counts: list[float]
    slope: float
    stderr: float
    window: tuple[int, int]
    method: str = "box_counting"

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "epsilons": list(self.epsilons),
            "counts": list(self.counts),
            "slope": self.slope,
            "stderr": self.stderr,
            "window": list(self.window),
        }
