import io
import json
from datetime import datetime, timezone
from typing import Optional

import pandas as pd

from src.backend.services.artifact_writer import FLOAT_FORMAT, MANIFEST_NAME, _to_jsonable
from src.protocols.protocols.artifact_writer_protocol import ArtifactWriterProtocol
from src.protocols.schemas import OutputFormat


class MockArtifactWriter(ArtifactWriterProtocol):
    """
    In-memory artifact writer for testing.

    Tables are kept as the CSV text the real writer would produce, so reading them back
    goes through the same serialization.
    """

    def __init__(
        self,
        output_dir: str = "memory://run",
        formats=(OutputFormat.CSV, OutputFormat.JSON),
    ):
        self.output_dir = str(output_dir)
        self.formats = tuple(formats)
        self.files: dict[str, str] = {}

    def wants(self, fmt: OutputFormat) -> bool:
        return fmt in self.formats

    def write_frame(
        self, filename: str, frame: pd.DataFrame, force: bool = False
    ) -> Optional[str]:
        if not force and not self.wants(OutputFormat.CSV):
            return None
        self.files[filename] = frame.to_csv(index=False, float_format=FLOAT_FORMAT)
        return f"{self.output_dir}/{filename}"

    def write_json(
        self, filename: str, payload: dict, force: bool = False
    ) -> Optional[str]:
        if not force and not self.wants(OutputFormat.JSON):
            return None
        self.files[filename] = json.dumps(_to_jsonable(payload), indent=2)
        return f"{self.output_dir}/{filename}"

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
            "code_version": "mock",
            "created_at": datetime.now(timezone.utc).isoformat(),
            "wall_time_seconds": wall_time,
            "artifacts": sorted(a.rsplit("/", 1)[-1] for a in artifacts if a),
        }
        manifest.update(extra or {})
        return self.write_json(MANIFEST_NAME, manifest, force=True)

    def read_frame(self, filename: str) -> pd.DataFrame:
        if filename not in self.files:
            raise FileNotFoundError(filename)
        return pd.read_csv(io.StringIO(self.files[filename]), float_precision="round_trip")

    def read_json(self, filename: str) -> dict:
        if filename not in self.files:
            raise FileNotFoundError(filename)
        return json.loads(self.files[filename])

    def exists(self, filename: str) -> bool:
        return filename in self.files
