from pathlib import Path

from src.backend.models.preset_repository import PresetRepository


class MockPresetRepository(PresetRepository):
    """Mock implementation of PresetRepository for development and testing"""

    def __init__(self, presets_dir: Path):
        super().__init__(presets_dir)
