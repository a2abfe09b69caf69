from .experiment_config import ExperimentConfig, InitialProfile, OutputOptions
from .history_segment import HistorySegment
from .model_spec import (
    BirthFunction,
    DelayedMap,
    DelayFunctional,
    ModelSpec,
    Nonlinearity,
    Smoothing,
)
from .point_cloud import DimensionEstimate, PointCloud
from .preset_repository import Preset, PresetRepository
from .spectrum import GridState, SpectralState, Spectrum
from .trajectory import IntegratorConfig, TrajectoryRecord

__all__ = [
    "BirthFunction",
    "DelayedMap",
    "DelayFunctional",
    "DimensionEstimate",
    "ExperimentConfig",
    "GridState",
    "HistorySegment",
    "InitialProfile",
    "IntegratorConfig",
    "ModelSpec",
    "Nonlinearity",
    "OutputOptions",
    "PointCloud",
    "Preset",
    "PresetRepository",
    "Smoothing",
    "SpectralState",
    "Spectrum",
    "TrajectoryRecord",
]
