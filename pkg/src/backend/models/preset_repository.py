import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from src.protocols.protocols.preset_repository_protocol import (
    PresetRepositoryProtocol,
)

PRESETS_DIR = Path(__file__).resolve().parent.parent / "presets"

logger = logging.getLogger(__name__)


@dataclass
class Preset:
    id: str
    name: str
    description: str
    preset_dir: Path

    @property
    def config_path(self) -> Path:
        return self.preset_dir / "config.json"

    def exists(self) -> bool:
        return self.preset_dir.exists() and self.config_path.exists()

    def read_config(self) -> dict:
        """The experiment config bundled with the preset, without the preset header"""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Preset config not found: {self.config_path}")
        with open(self.config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return {k: v for k, v in data.items() if k not in ("id", "name", "description")}


class PresetRepository(PresetRepositoryProtocol):
    def __init__(self, presets_dir: Path = PRESETS_DIR):
        self.presets_dir = Path(presets_dir)

    def get_all_presets(self) -> List[Preset]:
        """Presets whose config.json id matches their directory name"""
        presets = []

        if not self.presets_dir.exists():
            return []

        for preset_dir in sorted(self.presets_dir.iterdir()):
            if not preset_dir.is_dir() or preset_dir.name.startswith("_"):
                continue

            dir_name = preset_dir.name
            config = self._load_preset_config(preset_dir)
            if config is None:
                continue

            if config.get("id") != dir_name:
                logger.warning(
                    f"Skipping preset in '{preset_dir}'. ID '{config.get('id')}' in "
                    f"config.json does not match directory name '{dir_name}'."
                )
                continue

            presets.append(
                Preset(
                    id=config["id"],
                    name=config.get("name", dir_name.replace("_", " ").title()),
                    description=config.get("description", ""),
                    preset_dir=preset_dir,
                )
            )

        return presets

    def _load_preset_config(self, preset_dir: Path) -> Optional[Dict]:
        config_path = preset_dir / "config.json"
        if not config_path.exists():
            logger.warning(f"Skipping preset in '{preset_dir}': no config.json")
            return None

        try:
            with open(config_path, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.warning(f"Could not parse config.json in '{preset_dir}': {e}")
            return None

    def get_preset_by_id(self, preset_id: str) -> Optional[Preset]:
        presets = self.get_all_presets()
        return next((p for p in presets if p.id == preset_id), None)
