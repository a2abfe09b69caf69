import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from src.backend.models.model_spec import ModelSpec
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig
from src.protocols.schemas import ExperimentKind, OutputFormat

OUTPUT_DIR_ENV = "SDD_OUTPUT_DIR"
DEFAULT_RUNS_DIR = Path("runs")

INITIAL_KINDS = ("constant", "ramp", "random")


@dataclass(frozen=True)
class InitialProfile:
    """
    Initial history phi on [-r, 0].

    constant: phi(theta) = u0
    ramp:     phi(theta) = (1 + theta / r) u0
    random:   constant history whose coefficients are drawn with 1/k decay and
              rescaled so that |phi|_C = amplitude
    """

    kind: str = "constant"
    coeffs: tuple[float, ...] = (1.0,)
    amplitude: float = 1.0

    def base_state(self, m: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        if self.kind == "random":
            rng = rng or np.random.default_rng(0)
            row = rng.standard_normal(m) / np.arange(1, m + 1)
            return self.amplitude * row / np.linalg.norm(row)
        u0 = np.zeros(m)
        count = min(m, len(self.coeffs))
        u0[:count] = self.coeffs[:count]
        return u0

    def sampler(
        self, m: int, r: float, rng: Optional[np.random.Generator] = None
    ) -> Callable[[float], SpectralState]:
        u0 = self.base_state(m, rng)
        if self.kind == "ramp":
            return lambda theta: SpectralState((1.0 + theta / r) * u0, theta)
        return lambda theta: SpectralState(u0, theta)


@dataclass(frozen=True)
class OutputOptions:
    directory: Optional[str] = None
    formats: tuple[OutputFormat, ...] = (OutputFormat.CSV, OutputFormat.JSON)

    def wants(self, fmt: OutputFormat) -> bool:
        return fmt in self.formats


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Parsed experiment file: model, integrator, experiment block and output options"""

    kind: ExperimentKind
    model: ModelSpec
    integrator: IntegratorConfig
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output: OutputOptions = field(default_factory=OutputOptions)
    raw: dict = field(default_factory=dict)

    def rng(self, offset: int = 0) -> np.random.Generator:
        return np.random.default_rng((0 if self.seed is None else self.seed) + offset)

    def initial_profile(self, key: str = "initial") -> InitialProfile:
        block = self.params.get(key) or {}
        return InitialProfile(
            kind=block.get("kind", "constant"),
            coeffs=tuple(block.get("coeffs", (1.0,))),
            amplitude=float(block.get("amplitude", 1.0)),
        )

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Override the seed, keeping the echoed config in sync"""
        raw = dict(self.raw)
        experiment = dict(raw.get("experiment", {}))
        experiment["seed"] = seed
        raw["experiment"] = experiment
        return replace(self, seed=seed, raw=raw)

    def resolve_output_dir(
        self, override: Optional[str] = None, env: Optional[dict] = None
    ) -> Path:
        """--out flag, then the config's output.directory, then $SDD_OUTPUT_DIR, then runs/<kind>"""
        env = os.environ if env is None else env
        if override:
            return Path(override)
        if self.output.directory:
            return Path(self.output.directory)
        if env.get(OUTPUT_DIR_ENV):
            return Path(env[OUTPUT_DIR_ENV])
        return DEFAULT_RUNS_DIR / self.kind.value
