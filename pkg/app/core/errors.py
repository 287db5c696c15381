"""
Exception hierarchy shared by the lattice kit.

Everything raised on purpose derives from LbError so the CLI and the HTTP
layer can map failures to exit codes / error envelopes in one place.
"""

from typing import Optional, Sequence


class LbError(Exception):
    """Base class for all kit errors."""


class ValidationError(LbError, ValueError):
    """Invalid input parameters."""


class StabilityError(ValidationError):
    """Relaxation parameters outside the stable range."""


class ConfigError(ValidationError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(ValidationError):
    """Geometry cannot be built or sampled as requested."""


class ShapeMismatchError(ValidationError):
    """Two lattices that must share a grid do not."""


class SingularBoundaryError(ValidationError):
    """Wet-node density closure divides by (almost) zero."""


class NumericalBlowupError(LbError):
    """Density became non-positive or non-finite during a run."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class OptimizerError(LbError):
    """Base class for optimizer failures."""


class StepFailureError(OptimizerError):
    """Line search exhausted its attempts; carries the best point seen."""

    def __init__(self, message: str, best_step: float = 0.0,
                 best_value: float = float("inf"), best_control: Optional[Sequence[float]] = None):
        self.best_step = best_step
        self.best_value = best_value
        self.best_control = best_control
        super().__init__(message)


class MaxIterationsError(OptimizerError):
    """Raised when the iteration limit is reached and failOnMaxIter is set."""
