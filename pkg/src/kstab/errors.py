"""Exception hierarchy.

Validation problems (bad input data) and computational failures are kept
apart so the command line can map them to distinct exit codes.
"""


class KStabError(Exception):
    """Base class for all library errors."""


class ValidationError(KStabError, ValueError):
    """Input data violates a structural invariant (polytope, function, basis)."""


class ComputationError(KStabError):
    """A well-formed computation could not be completed.

    ``operation`` names the routine that failed.
    """

    operation = "computation"

    def __init__(self, message: str, operation: str | None = None):
        super().__init__(message)
        if operation is not None:
            self.operation = operation


class UnscaledConfig(ComputationError):
    operation = "weight_spectrum"


class DegenerateGram(ComputationError):
    operation = "projection"


class FitMismatch(ComputationError):
    operation = "ehrhart_fit"


class NonConvergence(ComputationError):
    operation = "infimum_norm"
