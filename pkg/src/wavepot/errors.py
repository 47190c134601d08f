"""Exception types shared across the package."""

from __future__ import annotations


class WavepotError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(WavepotError, ValueError):
    """Operands live on different grids or have the wrong dimensionality."""


class ExprSyntaxError(WavepotError, ValueError):
    """Expression source could not be parsed.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class ExprEvalError(WavepotError, ValueError):
    """Expression references a name that is not bound at evaluation time."""


class NonFiniteSampleError(WavepotError, ValueError):
    """Sampling an expression produced a NaN or infinity at a grid point."""


class StabilityError(WavepotError, RuntimeError):
    """Requested time step exceeds the integrator's stability budget."""


class SolverError(WavepotError, RuntimeError):
    """Iterative linear solver failed to reach its residual tolerance."""


class GaugeError(WavepotError, ValueError):
    """Proposed gauge function is not in the operator kernel.

    Carries ``residual`` and ``bound`` so callers can report how far off it is.
    """

    def __init__(self, message: str, residual: float, bound: float):
        super().__init__(message)
        self.residual = residual
        self.bound = bound


class IncompatibleRhsError(WavepotError, ValueError):
    """Elliptic right-hand side has a component along a zero mode."""


class ContinuityError(WavepotError, ValueError):
    """Charge/current sources violate the continuity equation."""


class ScenarioError(WavepotError, ValueError):
    """Scenario file is missing fields, malformed, or inconsistent."""


class MonitorError(WavepotError, RuntimeError):
    """A configured invariant ceiling was exceeded during a run."""
