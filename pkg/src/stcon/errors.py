"""Exception hierarchy shared by all modules.

Two failure families matter to callers: bad inputs (rejected up front,
CLI exit code 1) and broken internal guarantees discovered while running
or replaying a simulation (CLI exit code 2).
"""


class StconError(Exception):
    """Base class for package errors."""


class ValidationError(StconError, ValueError):
    """Input, configuration, or precondition violation."""


class ModeMismatch(ValidationError):
    """Operation applied to a trace from an incompatible input mode."""


class InvariantViolation(StconError, RuntimeError):
    """An internal consistency guarantee failed; indicates a bug."""
