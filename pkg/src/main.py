import argparse
import logging
import sys
from typing import Optional

from src.backend.experiments import ExperimentRunner
from src.backend.experiments.runner import (
    EXIT_BLOW_UP,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_RUNTIME_ERROR,
)
from src.backend.models.errors import BlowUpError, ConfigError
from src.backend.models.experiment_config import ExperimentConfig
from src.backend.models.preset_repository import PresetRepository
from src.backend.services.config_parser import ConfigParser
from src.protocols.protocols.preset_repository_protocol import PresetRepositoryProtocol
from src.protocols.schemas import ExperimentKind

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# preset used when a subcommand gets neither --config nor --preset
DEFAULT_PRESETS = {
    ExperimentKind.SIMULATE: "linear",
    ExperimentKind.PAIR: "pair",
    ExperimentKind.DISSIPATIVITY: "nicholson",
    ExperimentKind.DIMENSION: "feedback",
    ExperimentKind.REFINE: "refine",
    ExperimentKind.VALIDATE: "default",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdd-attractors",
        description="Spectral-Galerkin experiments for parabolic equations with state-dependent delay.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    for kind in ExperimentKind:
        sub = commands.add_parser(kind.value, help=f"run a {kind.value} experiment")
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--config", help="path to an experiment config (JSON)")
        source.add_argument(
            "--preset", help=f"bundled preset id [default: {DEFAULT_PRESETS[kind]}]"
        )
        sub.add_argument("--out", help="artifact directory (overrides the config)")
        sub.add_argument("--seed", type=int, help="overrides experiment.seed")

    resume = commands.add_parser("resume", help="continue a simulate run from its state dump")
    resume.add_argument("run_dir", help="artifact directory of the earlier run")
    resume.add_argument(
        "--additional-T", dest="additional_T", type=float, required=True, help="extra time"
    )

    commands.add_parser("presets", help="list bundled presets")
    return parser


def load_config(
    args: argparse.Namespace,
    repository: PresetRepositoryProtocol,
    parser: Optional[ConfigParser] = None,
) -> ExperimentConfig:
    """Config for an experiment subcommand; the file's kind must match the subcommand"""
    parser = parser or ConfigParser()
    kind = ExperimentKind(args.command)
    if args.config:
        config = parser.load(args.config, seed=args.seed)
    else:
        preset_id = args.preset or DEFAULT_PRESETS[kind]
        preset = repository.get_preset_by_id(preset_id)
        if preset is None:
            raise ConfigError("preset", f"no bundled preset named '{preset_id}'")
        config = parser.build(preset.read_config(), seed=args.seed)
    if config.kind is not kind:
        raise ConfigError(
            "experiment.kind",
            f"config describes a '{config.kind.value}' experiment, not '{kind.value}'",
        )
    return config


def list_presets(repository: PresetRepositoryProtocol) -> int:
    for preset in repository.get_all_presets():
        print(f"{preset.id:<12} {preset.name}: {preset.description}")
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    """
    Command-line entry point. Returns the process exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT
    )
    repository = PresetRepository()

    if args.command == "presets":
        return list_presets(repository)

    try:
        if args.command == "resume":
            result = ExperimentRunner().resume(args.run_dir, args.additional_T)
        else:
            config = load_config(args, repository)
            result = ExperimentRunner(output_override=args.out).run(config)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BlowUpError as e:
        logger.error(f"Blow-up: {e}")
        print(f"blow-up at t={e.time:.17g}", file=sys.stderr)
        return EXIT_BLOW_UP
    except Exception as e:
        logger.exception("Experiment failed")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR

    print(f"{result.kind.value}: artifacts in {result.output_dir} (exit {result.exit_code})")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
