"""Exception hierarchy.

The CLI maps :class:`InputError` to exit code 2 and every
:class:`AlgorithmError` to exit code 3.
"""


class SgbnError(Exception):
    """Base class for all library errors."""


class InputError(SgbnError, ValueError):
    """Malformed input: bad shapes, non-finite values, unparsable files."""


class DimensionError(InputError):
    pass


class ZeroVarianceError(InputError):
    def __init__(self, column, name=None):
        self.column = column
        self.name = name
        label = f"{column}" if name is None else f"{column} ({name!r})"
        super().__init__(f"column {label} has zero variance")


class CycleError(InputError):
    """A structure that must be acyclic contains a directed cycle."""


class AlgorithmError(SgbnError):
    """An algorithm could not produce a certified result."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SolverError(AlgorithmError):
    pass


class NotDagError(AlgorithmError):
    def __init__(self, message, bound=None, report=None):
        super().__init__(message, report)
        self.bound = bound


class InfeasibleBudgetError(AlgorithmError):
    pass
