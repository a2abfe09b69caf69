"""Parser and validator for experiment configuration files"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Type

import numpy as np

from src.backend.models.errors import ConfigError, InvalidDiscretizationError
from src.backend.models.experiment_config import (
    INITIAL_KINDS,
    ExperimentConfig,
    OutputOptions,
)
from src.backend.models.history_segment import steps_per_delay
from src.backend.models.model_spec import (
    BirthFunction,
    DelayedMap,
    DelayFunctional,
    ModelSpec,
    Nonlinearity,
    Smoothing,
)
from src.backend.models.spectrum import SpectralState
from src.backend.models.trajectory import IntegratorConfig
from src.backend.services.spectral_core import build_dirichlet_spectrum
from src.protocols.schemas import (
    BirthKind,
    DelayKind,
    ExperimentKind,
    OutputFormat,
    Scheme,
    SmoothingKind,
)

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {"model", "integrator", "experiment", "output"}
METADATA_KEYS = {"id", "name", "description"}


class ConfigParser:
    """
    Reads the JSON experiment file into an ExperimentConfig.

    Keys starting with an underscore are annotations and ignored at any depth. Every
    validation failure raises ConfigError naming the dotted field.
    """

    def load(self, path: Path, seed: Optional[int] = None) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError("config", f"cannot read '{path}': {e}") from e
        return self.parse(text, seed)

    def parse(self, text: str, seed: Optional[int] = None) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
        return self.build(data, seed)

    def build(self, data: dict, seed: Optional[int] = None) -> ExperimentConfig:
        """Validate a config mapping; seed, when given, replaces experiment.seed"""
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        if seed is not None and isinstance(data.get("experiment"), dict):
            data = {**data, "experiment": {**data["experiment"], "seed": seed}}
        data = {k: v for k, v in _strip_annotations(data).items() if k not in METADATA_KEYS}
        unknown = set(data) - TOP_LEVEL_KEYS
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown top-level section")

        experiment = _section(data, "experiment")
        kind = _enum(ExperimentKind, _require(experiment, "kind", "experiment"), "experiment.kind")
        seed = experiment.get("seed")
        if seed is not None:
            seed = _integer(seed, "experiment.seed", minimum=0)
        elif kind.randomized:
            raise ConfigError("experiment.seed", f"required for '{kind.value}' experiments")
        params = experiment.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("experiment.params", "must be an object")
        self._check_initial(params)

        model = self.build_model(_section(data, "model"))
        integrator = self.build_integrator(_section(data, "integrator"), model.r)
        output = self._build_output(data.get("output", {}))
        logger.debug(f"Parsed '{kind.value}' config: m={model.m}, r={model.r}, dt={integrator.dt}")
        return ExperimentConfig(
            kind=kind,
            model=model,
            integrator=integrator,
            params=params,
            seed=seed,
            output=output,
            raw=data,
        )

    def build_model(self, block: dict) -> ModelSpec:
        spectrum_block = _section(block, "spectrum", "model")
        m = _integer(_require(spectrum_block, "m", "model.spectrum"), "model.spectrum.m", minimum=1)
        L = _number(spectrum_block.get("L", math.pi), "model.spectrum.L", positive=True)
        spectrum = build_dirichlet_spectrum(m, L)

        eta = self._build_eta(_section(block, "eta", "model"), m)
        fmap = self._build_fmap(_section(block, "fmap", "model"), m)

        g_block = block.get("g", {})
        gterm = Nonlinearity(
            a1=_number(g_block.get("a1", 0.0), "model.g.a1"),
            a2=_number(g_block.get("a2", 0.0), "model.g.a2"),
            a3=_number(g_block.get("a3", 1.0), "model.g.a3"),
        )

        h_values = block.get("h")
        h = np.zeros(m) if not h_values else _vector(h_values, "model.h", max_len=m).padded(m)
        includes_h = block.get("x_space_includes_h", True)
        if not isinstance(includes_h, bool):
            raise ConfigError("model.x_space_includes_h", "must be a boolean")
        return ModelSpec(
            spectrum=spectrum,
            eta=eta,
            fmap=fmap,
            gterm=gterm,
            h=SpectralState(h),
            x_space_includes_h=includes_h,
        )

    def build_integrator(self, block: dict, r: float) -> IntegratorConfig:
        dt = _number(_require(block, "dt", "integrator"), "integrator.dt", positive=True)
        T_final = _number(_require(block, "T_final", "integrator"), "integrator.T_final", positive=True)
        try:
            steps_per_delay(r, dt)
        except InvalidDiscretizationError as e:
            raise ConfigError("integrator.dt", str(e)) from e
        if T_final < dt:
            raise ConfigError("integrator.T_final", f"must be >= dt={dt}, got {T_final}")
        if abs(T_final / dt - round(T_final / dt)) > 1e-9 * max(1.0, T_final / dt):
            raise ConfigError("integrator.T_final", f"must be a multiple of dt={dt}")
        scheme = _enum(Scheme, block.get("scheme", Scheme.ETD_RK2.value), "integrator.scheme")
        record_every = _integer(block.get("record_every", 1), "integrator.record_every", minimum=1)
        dump_states = block.get("dump_states", False)
        if not isinstance(dump_states, bool):
            raise ConfigError("integrator.dump_states", "must be a boolean")
        return IntegratorConfig(
            dt=dt,
            T_final=T_final,
            scheme=scheme,
            record_every=record_every,
            store_states=dump_states,
        )

    def _build_eta(self, block: dict, m: int) -> DelayFunctional:
        kind = _enum(DelayKind, _require(block, "kind", "model.eta"), "model.eta.kind")
        r = _number(_require(block, "r", "model.eta"), "model.eta.r", positive=True)
        params = block.get("params", {})
        w = _vector(params.get("w", [1.0]), "model.eta.params.w", max_len=m)
        return DelayFunctional(
            kind=kind,
            r=r,
            w=w.coeffs,
            kappa=_number(params.get("kappa", 1.0), "model.eta.params.kappa", positive=True),
            tau0=_number(params.get("tau0", 0.0), "model.eta.params.tau0"),
        )

    def _build_fmap(self, block: dict, m: int) -> DelayedMap:
        b_block = _section(block, "b", "model.fmap")
        b_kind = _enum(BirthKind, _require(b_block, "kind", "model.fmap.b"), "model.fmap.b.kind")
        b = BirthFunction(
            kind=b_kind,
            c1=_number(b_block.get("c1", 1.0), "model.fmap.b.c1"),
            c2=_number(b_block.get("c2", 1.0), "model.fmap.b.c2"),
            slope=_number(b_block.get("slope", 1.0), "model.fmap.b.slope"),
            c=_number(b_block.get("c", 1.0), "model.fmap.b.c"),
        )
        if b_kind is BirthKind.NICHOLSON and b.c2 < 0.0:
            raise ConfigError("model.fmap.b.c2", f"must be nonnegative, got {b.c2}")

        B_block = block.get("B", {"kind": SmoothingKind.LOWPASS.value, "K": min(8, m)})
        B_kind = _enum(SmoothingKind, _require(B_block, "kind", "model.fmap.B"), "model.fmap.B.kind")
        if B_kind is SmoothingKind.LOWPASS:
            K = _integer(_require(B_block, "K", "model.fmap.B"), "model.fmap.B.K", minimum=1)
            if K > m:
                raise ConfigError("model.fmap.B.K", f"must lie in [1, {m}], got {K}")
            B = Smoothing(kind=B_kind, K=K)
        elif B_kind is SmoothingKind.DIAG:
            sigma = _vector(_require(B_block, "sigma", "model.fmap.B"), "model.fmap.B.sigma")
            if sigma.m != m:
                raise ConfigError("model.fmap.B.sigma", f"needs {m} entries, got {sigma.m}")
            B = Smoothing(kind=B_kind, sigma=sigma.coeffs)
        else:
            B = Smoothing(kind=B_kind)
        return DelayedMap(b=b, B=B)

    def _build_output(self, block: dict) -> OutputOptions:
        if not isinstance(block, dict):
            raise ConfigError("output", "must be an object")
        directory = block.get("directory")
        if directory is not None and not isinstance(directory, str):
            raise ConfigError("output.directory", "must be a string")
        formats = block.get("formats", [f.value for f in OutputFormat])
        if not isinstance(formats, list) or not formats:
            raise ConfigError("output.formats", "must be a nonempty list")
        parsed = tuple(_enum(OutputFormat, f, "output.formats") for f in formats)
        return OutputOptions(directory=directory, formats=parsed)

    def _check_initial(self, params: dict) -> None:
        for key in ("initial", "perturbation"):
            block = params.get(key)
            if block is None:
                continue
            if not isinstance(block, dict):
                raise ConfigError(f"experiment.params.{key}", "must be an object")
            kind = block.get("kind", "constant")
            if kind not in INITIAL_KINDS:
                raise ConfigError(
                    f"experiment.params.{key}.kind",
                    f"must be one of {', '.join(INITIAL_KINDS)}, got '{kind}'",
                )
            if "coeffs" in block:
                _vector(block["coeffs"], f"experiment.params.{key}.coeffs")


def _strip_annotations(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _strip_annotations(v) for k, v in value.items() if not str(k).startswith("_")}
    if isinstance(value, list):
        return [_strip_annotations(v) for v in value]
    return value


def _section(data: dict, key: str, parent: Optional[str] = None) -> dict:
    path = key if parent is None else f"{parent}.{key}"
    value = data.get(key)
    if value is None:
        raise ConfigError(path, "missing required section")
    if not isinstance(value, dict):
        raise ConfigError(path, "must be an object")
    return value


def _require(data: dict, key: str, parent: str) -> Any:
    if key not in data:
        raise ConfigError(f"{parent}.{key}", "missing required field")
    return data[key]


def _number(value: Any, path: str, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if positive and value <= 0.0:
        raise ConfigError(path, f"must be positive, got {value}")
    return value


def _integer(value: Any, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _vector(value: Any, path: str, max_len: Optional[int] = None) -> SpectralState:
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "must be a nonempty list of numbers")
    if max_len is not None and len(value) > max_len:
        raise ConfigError(path, f"holds {len(value)} entries, more than m={max_len}")
    return SpectralState([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _enum(enum_cls: Type[Enum], value: Any, path: str) -> Enum:
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(path, f"must be one of {choices}, got {value!r}") from None
