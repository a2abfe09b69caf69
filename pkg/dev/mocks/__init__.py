from .mock_artifact_writer import MockArtifactWriter
from .mock_preset_repository import MockPresetRepository

__all__ = [
    "MockArtifactWriter",
    "MockPresetRepository",
]
