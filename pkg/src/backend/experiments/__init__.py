from .outcome import ExperimentOutcome
from .runner import ExperimentRunner, RunResult

__all__ = ["ExperimentOutcome", "ExperimentRunner", "RunResult"]
