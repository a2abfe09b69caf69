from typing import Optional, Protocol

import pandas as pd


class ArtifactWriterProtocol(Protocol):
    output_dir: str

    def write_frame(
        self, filename: str, frame: pd.DataFrame, force: bool = False
    ) -> Optional[str]:
        """Write a table as CSV; returns the path or None when CSV output is disabled"""
        ...

    def write_json(
        self, filename: str, payload: dict, force: bool = False
    ) -> Optional[str]:
        """Write a JSON report; returns the path or None when JSON output is disabled"""
        ...

    def write_manifest(
        self,
        config: dict,
        seed: Optional[int],
        wall_time: float,
        artifacts: list[str],
        extra: Optional[dict] = None,
    ) -> str:
        """Write manifest.json echoing the config, seed, code version and wall time"""
        ...

    def read_frame(self, filename: str) -> pd.DataFrame:
        """Read a CSV table written by write_frame"""
        ...

    def read_json(self, filename: str) -> dict:
        """Read a JSON report"""
        ...

    def exists(self, filename: str) -> bool:
        """Whether an artifact is present"""
        ...
