"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, parameter
guards and solver runtime failures exit 2.
"""


class PrivpackError(Exception):
    """Base class for all package-specific errors."""


class InstanceFormatError(PrivpackError):
    """An instance/workload file could not be parsed or fails validation."""


class ShapeMismatchError(PrivpackError):
    """Array dimensions disagree between two objects that must align."""


class ParameterGuardError(PrivpackError):
    """A derived-parameter precondition failed (e.g. the step-size/width
    positivity guard, or supply exceeding the number of agents)."""


class SolverRuntimeError(PrivpackError):
    """A solver invariant broke mid-run; carries the failing round index."""

    def __init__(self, message, round_index=None):
        super().__init__(message)
        self.round_index = round_index
