from .model_kinds import BasisKind, BirthKind, DelayKind, SmoothingKind
from .output_format import OutputFormat
from .run_kinds import ExperimentKind, Scheme

__all__ = [
    "BasisKind",
    "BirthKind",
    "DelayKind",
    "ExperimentKind",
    "OutputFormat",
    "Scheme",
    "SmoothingKind",
]
