import json
import logging
import os
import platform
from datetime import datetime, timezone
from importlib import metadata
from typing import Optional

import numpy as np
import pandas as pd

from src.protocols.schemas import OutputFormat

FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"
PACKAGE_NAME = "sdd-attractors"


def code_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "unknown"


def _to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


class ArtifactWriter:
    """
    Single writer for one artifact directory.

    CSV tables are written with 17 significant digits and read back with pandas'
    round-trip float parser, so a dump reloads bit-exactly.
    """

    OutputFormat = OutputFormat

    def __init__(self, output_dir: str, formats=(OutputFormat.CSV, OutputFormat.JSON)):
        self.output_dir = str(output_dir)
        self.formats = tuple(formats)
        self.logger = logging.getLogger(__name__)
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def wants(self, fmt: OutputFormat) -> bool:
        return fmt in self.formats

    def write_frame(self, filename: str, frame: pd.DataFrame, force: bool = False) -> Optional[str]:
        """Write a CSV table; skipped unless csv output is enabled or force is set"""
        if not force and not self.wants(OutputFormat.CSV):
            return None
        output_path = self.path(filename)
        frame.to_csv(output_path, index=False, float_format=FLOAT_FORMAT)
        self.logger.info(f"CSV written: {output_path} ({len(frame)} rows)")
        return output_path

    def write_json(self, filename: str, payload: dict, force: bool = False) -> Optional[str]:
        if not force and not self.wants(OutputFormat.JSON):
            return None
        output_path = self.path(filename)
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(_to_jsonable(payload), f, indent=2)
            f.write("\n")
        self.logger.info(f"JSON written: {output_path}")
        return output_path

    def write_manifest(
        self,
        config: dict,
        seed: Optional[int],
        wall_time: float,
        artifacts: list[str],
        extra: Optional[dict] = None,
    ) -> str:
        manifest = {
            "config": config,
            "seed": seed,
            "code_version": code_version(),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "wall_time_seconds": wall_time,
            "artifacts": sorted(os.path.basename(a) for a in artifacts if a),
        }
        manifest.update(extra or {})
        return self.write_json(MANIFEST_NAME, manifest, force=True)

    def read_frame(self, filename: str) -> pd.DataFrame:
        return pd.read_csv(self.path(filename), float_precision="round_trip")

    def read_json(self, filename: str) -> dict:
        with open(self.path(filename), "r", encoding="utf-8") as f:
            return json.load(f)

    def exists(self, filename: str) -> bool:
        return os.path.exists(self.path(filename))
