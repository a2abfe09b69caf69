from typing import TYPE_CHECKING, List, Optional, Protocol

if TYPE_CHECKING:
    from src.backend.models.preset_repository import Preset


class PresetRepositoryProtocol(Protocol):
    """Protocol for preset repository implementations"""

    def get_all_presets(self) -> List["Preset"]:
        """Get all bundled experiment presets"""
        ...

    def get_preset_by_id(self, preset_id: str) -> Optional["Preset"]:
        """Get a specific preset by ID"""
        ...
