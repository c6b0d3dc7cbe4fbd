"""Exception hierarchy shared across the package."""


class GraphShapleyError(Exception):
    """Base class for all domain errors raised by this package."""


class SingularSystem(GraphShapleyError):
    """Weighted least-squares normal matrix is numerically rank-deficient."""


class DimensionMismatch(GraphShapleyError):
    """Incompatible matrix/graph dimensions."""


class MissingLabels(GraphShapleyError):
    """Training requested but the graph carries no labels for the task."""


class ParseError(GraphShapleyError):
    """Malformed graph file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InconsistentDimensions(GraphShapleyError):
    """Graph file header disagrees with its body."""


class EmptyPlayerSet(GraphShapleyError):
    """Player reduction removed every candidate feature and node."""


class TooManyPlayers(GraphShapleyError):
    """Exact enumeration requested beyond the guard limit."""


class InsufficientSamples(GraphShapleyError):
    """Not enough coalition samples to identify the surrogate coefficients."""


class BudgetTooSmall(GraphShapleyError):
    """Sampling budget cannot even cover the anchor coalitions."""


class NoPath(GraphShapleyError):
    """Two nodes are disconnected."""


class TargetNotInMotif(GraphShapleyError):
    """Accuracy evaluation asked for a node without ground-truth motif."""
