from enum import Enum


class BasisKind(Enum):
    DIRICHLET_SINE = "dirichlet_sine"


class DelayKind(Enum):
    TANH_OF_INNER = "tanh_of_inner"
    NORM_SIGMOID = "norm_sigmoid"
    CONSTANT = "constant"


class BirthKind(Enum):
    NICHOLSON = "nicholson"
    LINEAR = "linear"
    BOUNDED_SATURATING = "bounded_saturating"


class SmoothingKind(Enum):
    IDENTITY = "identity"
    LOWPASS = "lowpass"
    DIAG = "diag"
