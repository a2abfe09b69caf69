from typing import TYPE_CHECKING, Protocol

if TYPE_CHECKING:
    from src.backend.experiments.runner import RunResult
    from src.backend.models.experiment_config import ExperimentConfig


class ExperimentProtocol(Protocol):
    """
    Protocol for experiment runners.
    """

    def run(self, config: "ExperimentConfig") -> "RunResult":
        """
        Executes the experiment named by the config.

        Args:
            config: The parsed experiment configuration.

        Returns:
            The run result with its exit code, artifact directory and summary.
        """
        ...

    def resume(self, run_dir: str, additional_T: float) -> "RunResult":
        """
        Continues a finished simulate run from its state dump.

        Args:
            run_dir: Artifact directory of the earlier run.
            additional_T: Extra simulated time.

        Returns:
            The run result of the extended trajectory.
        """
        ...
