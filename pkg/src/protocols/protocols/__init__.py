from .artifact_writer_protocol import ArtifactWriterProtocol
from .experiment_protocol import ExperimentProtocol
from .preset_repository_protocol import PresetRepositoryProtocol

__all__ = ["ArtifactWriterProtocol", "ExperimentProtocol", "PresetRepositoryProtocol"]
