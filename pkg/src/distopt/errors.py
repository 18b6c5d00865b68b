"""Exception types raised across the package."""

from __future__ import annotations


class DistoptError(Exception):
    """Base class for all package errors."""


class DimensionError(DistoptError, ValueError):
    pass


class PreconditionError(DistoptError, ValueError):
    pass


class UnsupportedError(DistoptError, NotImplementedError):
    pass


class ScheduleRangeError(DistoptError, ValueError):
    pass


class StepAlignmentError(DistoptError, ValueError):
    pass


class StateCorruptionError(DistoptError, FloatingPointError):
    pass


class NonConvergenceError(DistoptError, RuntimeError):
    """Iterative projection did not reach its tolerance.

    Carries the last iterate and the residual so callers can decide whether
    the approximate answer is still usable.
    """

    def __init__(self, message, last_iterate=None, residual=float("nan")):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class OracleError(DistoptError, RuntimeError):
    pass


class SimulationError(DistoptError, RuntimeError):
    """A solver step failed; the partial trajectory is attached."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ScenarioParseError(DistoptError, ValueError):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class ScenarioValidationError(DistoptError, ValueError):
    """Scenario violates one or more standing assumptions.

    ``issues`` is a list of ``(assumption, detail)`` pairs.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = [f"{a}: {d}" for a, d in self.issues]
        super().__init__("scenario validation failed:\n  " + "\n  ".join(lines))

    @property
    def assumptions(self):
        return sorted({a for a, _ in self.issues})
