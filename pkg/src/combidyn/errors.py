"""Exception types shared across the package."""


class CombidynError(Exception):
    """Base class for all package errors."""


class DimensionError(CombidynError):
    """Array shapes or grids do not match the system they are used with."""


class IntegrationDivergedError(CombidynError):
    """Forward integration produced a non-finite state."""

    def __init__(self, knot_index, message=None):
        self.knot_index = knot_index
        super().__init__(message or f"non-finite state at knot {knot_index}")


class AdjointDivergedError(CombidynError):
    """Backward costate integration produced a non-finite value."""

    def __init__(self, knot_index, message=None):
        self.knot_index = knot_index
        super().__init__(message or f"non-finite costate at knot {knot_index}")


class NotRelaxableError(CombidynError):
    """A relaxed (fractional-decision) evaluation was requested on a system
    whose field and payoff are declared only on binary decisions."""


class ConstraintError(CombidynError):
    """A constraint set violates its own invariants (bad band, negative
    capacity, malformed rows)."""


class InfeasibleError(CombidynError):
    """No binary vector satisfies the constraints."""

    def __init__(self, message="infeasible constraint set", step=None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


class TuViolationError(CombidynError):
    """The relaxed linear program returned a fractional vertex, i.e. the
    caller's total-unimodularity assertion was false."""


class EnumerationRefusedError(CombidynError):
    """An exhaustive operation was requested above its dimension guard."""


class NumericError(CombidynError):
    """A numerical procedure failed to converge or hit an iteration guard."""


class ScenarioError(CombidynError):
    """A scenario file is malformed; carries the field path and line."""

    def __init__(self, path, message, line=None):
        self.field_path = path
        self.line = line
        where = f"{path}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}: {message}")
