"""Exception types raised across the quadtrack pipeline."""

from pathlib import Path
from typing import Optional


class QuadtrackError(Exception):
    """Base class for all pipeline errors."""


class HarmonicParseError(QuadtrackError, ValueError):
    """Malformed harmonic input; carries the file and 1-based line number."""

    def __init__(self, message: str, path: Optional[Path | str] = None, line: Optional[int] = None):
        self.path = Path(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = f"{self.path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")


class GridError(QuadtrackError, ValueError):
    """Non-uniform or inconsistent sampling grid."""


class DomainError(QuadtrackError, ValueError):
    """Argument outside the domain of a physical relation."""


class ConfigError(QuadtrackError, ValueError):
    """Invalid run configuration."""


class DataError(QuadtrackError):
    """Non-finite sample encountered in a coefficient table."""


class UndefinedFieldError(QuadtrackError):
    """A normalized diagnostic was requested for a vanishing field."""


class StepLengthMismatchError(QuadtrackError, ValueError):
    """Element span is not an integer multiple of the integration step."""


class GaugeConstructionError(QuadtrackError):
    """A structural identity of a gauge construction failed."""


class FixedPointError(QuadtrackError):
    """Implicit stage iteration did not converge."""

    def __init__(self, residual: float, iterations: int, z: float):
        self.residual = residual
        self.iterations = iterations
        self.z = z
        super().__init__(
            f"fixed-point iteration did not converge at Z={z:.6g} after {iterations} "
            f"iterations (last update {residual:.3e})"
        )
