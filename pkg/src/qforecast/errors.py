"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class QForecastError(Exception):
    exit_code = 1


class ConfigurationError(QForecastError, ValueError):
    exit_code = 2


class UsageError(QForecastError, ValueError):
    exit_code = 2


class WeightsError(QForecastError):
    exit_code = 3


class DataError(QForecastError, ValueError):
    exit_code = 4


class TrainingError(QForecastError):
    """Raised on divergence or non-finite gradients; ``history`` holds the
    partial TrainHistory when available."""

    exit_code = 5

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class TruncationWarning(UserWarning):
    """State norm drifted past tolerance after a CV gate (cutoff too small)."""

    def __init__(self, drift: float):
        super().__init__(f"Fock truncation: norm drift {drift:.3e} exceeds 1e-3")
        self.drift = drift
