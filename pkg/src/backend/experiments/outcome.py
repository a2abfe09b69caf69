from dataclasses import dataclass, field
from typing import Callable

ReportPhase = Callable[[str], None]


@dataclass
class ExperimentOutcome:
    """What one experiment kind hands back to the runner"""

    summary: dict = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    passed: bool = True
    manifest_extra: dict = field(default_factory=dict)

    def add(self, *paths) -> None:
        self.artifacts.extend(p for p in paths if p)
