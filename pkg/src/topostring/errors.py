"""Exception hierarchy shared by the pipeline stages."""

from __future__ import annotations


class TopostringError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(TopostringError, ValueError):
    """A configuration document is malformed or violates an invariant.

    ``field`` names the offending key path (``modes[2].harmonic``) and
    ``line`` carries the 1-based source line when the parser knows it.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field '{field}'")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class SchemaError(ConfigurationError):
    """A field is missing or has the wrong type."""


class InvariantError(ConfigurationError):
    """Fields parse but violate a configuration invariant."""


class SingularPointError(TopostringError, ArithmeticError):
    """The conformal factor vanishes (to tolerance) at the requested point."""


class DegenerateSpectrumError(TopostringError, ValueError):
    """A closed-form spectrum is undefined for the given amplitudes."""


class UnsupportedConfigurationError(TopostringError, ValueError):
    """The requested method does not cover this configuration shape."""


class NonConvergenceError(TopostringError, RuntimeError):
    """A numerical limit did not settle."""


class NotNearIntegerError(TopostringError, ValueError):
    """An integral is too far from any integer to define a characteristic number."""
