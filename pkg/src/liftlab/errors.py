"""Exception types shared across the package.

Exit-code mapping used by the CLI: input problems exit 1, resource and
solver problems exit 2.
"""


class LiftLabError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(LiftLabError):
    """Invalid user input (bad graph data, parameter out of range, ...)."""

    exit_code = 1


class ResourceLimitError(LiftLabError):
    """A configured size cap was exceeded (ball vertex cap, dense cap, ...)."""

    exit_code = 2


class SolverError(LiftLabError):
    """An iterative solver failed to converge.

    Carries the last residual norm when available.
    """

    exit_code = 2

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
