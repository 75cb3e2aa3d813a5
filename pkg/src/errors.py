"""
Errors - One exception tree for the whole orchestrator

Callers that only care "did it work" catch OrchestratorError.
The CLI maps the concrete types onto exit codes.
"""

from typing import Optional


class OrchestratorError(Exception):
    """Base class for every error raised on purpose by this package."""


class DomainError(OrchestratorError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DagValidationError(OrchestratorError, ValueError):
    """
    An application DAG breaks one of its structural rules.

    Attributes:
        rule: which rule failed ("cycle", "reachability", "out_degree", "stage", "edge")
    """

    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


class RankDeficiencyError(OrchestratorError, ArithmeticError):
    """The ridge normal equations are singular (only possible at lambda = 0)."""

    def __init__(self, rank: int, size: int):
        super().__init__(
            f"Gram matrix is rank deficient (rank {rank} < {size}); retry with lambda > 0"
        )
        self.rank = rank
        self.size = size


class ConfigurationError(OrchestratorError):
    """Inputs are individually valid but do not fit together."""


class InputFormatError(OrchestratorError, ValueError):
    """A text or CSV input could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}:"
        if line is not None:
            location += f"{line}:"
        super().__init__(f"{location} {message}" if location else message)
        self.path = path
        self.line = line


class SizeGuardError(OrchestratorError):
    """The exhaustive oracle was asked to enumerate an instance that is too large."""


class ConsistencyError(OrchestratorError, RuntimeError):
    """The scheduler state machine received an event that contradicts its state."""
