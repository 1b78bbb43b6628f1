"""Exception hierarchy shared by every leadsteer module."""

from __future__ import annotations


class LeadSteerError(Exception):
    """Base class for all errors raised by leadsteer."""


class DimensionError(LeadSteerError, ValueError):
    """Array shapes disagree with the system they are applied to."""

    def __init__(self, what: str, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


class InvalidTargetError(LeadSteerError, ValueError):
    """The target vector or orientation cannot define a focused density."""


class DegenerateTargetError(InvalidTargetError):
    """Target row or target vector is identically zero."""


class ConfigurationError(LeadSteerError, ValueError):
    """A system, search space or study is configured inconsistently."""


class GeometryError(LeadSteerError, ValueError):
    """Grid and contact geometry are incompatible."""


class TargetLookupError(LeadSteerError, KeyError):
    """A target position does not match any grid position."""

    def __init__(self, position, nearest_index: int, nearest_position, distance: float):
        self.position = position
        self.nearest_index = nearest_index
        self.nearest_position = nearest_position
        self.distance = distance
        super().__init__(
            f"no grid position at {list(position)}; nearest is index {nearest_index} "
            f"at {list(nearest_position)} ({distance:.6g} mm away)"
        )

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return self.args[0]


class ConstraintViolation(LeadSteerError, ValueError):
    """A current pattern violates its box, budget or zero-sum constraint."""


class LeadFieldFormatError(LeadSteerError, ValueError):
    """A lead field file does not match the interchange format."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)


class LpStatusError(LeadSteerError, RuntimeError):
    """An LP solve did not reach optimality."""

    def __init__(self, status: str, context: str = ""):
        self.status = status
        msg = f"LP status {status}"
        if context:
            msg += f": {context}"
        super().__init__(msg)


class SearchError(LeadSteerError, RuntimeError):
    """Every lattice point of a hyperparameter search failed."""

    def __init__(self, failures: dict):
        self.failures = failures
        lines = ", ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
        super().__init__(f"all lattice points failed ({lines})")
