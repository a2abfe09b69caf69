"""Exceptions raised by the simulator and the experiment harness"""


class SpectralDimensionError(ValueError):
    """Coefficient vector length does not fit the spectrum order."""


class InvalidDiscretizationError(ValueError):
    """Mode count, domain length or time step cannot define a discretization."""


class DelayRangeError(ValueError):
    """A delayed lookup fell outside the stored history window."""


class HistoryTimeError(ValueError):
    """A pushed state does not continue the uniform time grid."""


class MissingDerivativeError(ValueError):
    """An operation needs the derivative buffer of a history segment."""


class FitError(ValueError):
    """A fit window or epsilon ladder is degenerate."""


class BlowUpError(RuntimeError):
    """The integrated state became non-finite."""

    def __init__(self, time: float, message: str = "", last_diagnostics=None):
        self.time = time
        self.last_diagnostics = last_diagnostics or {}
        super().__init__(message or f"Non-finite state detected at t={time:.17g}")


class NonDissipativeError(RuntimeError):
    """A monitored quantity never settles into a bounded tail."""


class ConfigError(ValueError):
    """Experiment configuration violates the schema."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
