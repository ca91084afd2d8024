"""Exception types shared across the package.

All validation errors derive from ValueError so callers that only care
about "bad input" can catch the builtin; the subclasses exist so the CLI
can map failure categories onto distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad schedule parameters, unknown config keys,
    cross-reference mismatches (e.g. predictor trained on a different
    schedule than the run requests)."""


class DimensionError(ValueError):
    """Array shape mismatch between arguments that must agree."""


class TimestepError(ValueError):
    """Timestep outside the schedule's 1..T domain."""


class ConditionError(ValueError):
    """Condition not known to the predictor or mixture it was passed to."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss). Carries the step index."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class NumericError(RuntimeError):
    """Non-finite values encountered where finite ones are required."""


class TransportError(IOError):
    """Remote predictor I/O failure; retriable."""


class ProtocolError(RuntimeError):
    """Remote predictor returned a malformed or inconsistent response."""
