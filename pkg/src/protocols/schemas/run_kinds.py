from enum import Enum


class Scheme(Enum):
    ETD1 = "etd1"
    ETD_RK2 = "etd_rk2"


class ExperimentKind(Enum):
    SIMULATE = "simulate"
    PAIR = "pair"
    DISSIPATIVITY = "dissipativity"
    DIMENSION = "dimension"
    REFINE = "refine"
    VALIDATE = "validate"

    @property
    def randomized(self) -> bool:
        return self in (
            ExperimentKind.PAIR,
            ExperimentKind.DISSIPATIVITY,
            ExperimentKind.DIMENSION,
            ExperimentKind.VALIDATE,
        )
