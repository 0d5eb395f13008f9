IGEB_SUCCESS = 0
IGEB_INVALID_PARAMETER = 1
IGEB_CONFIG_ERROR = 2
IGEB_SOLVER_ERROR = 3
IGEB_CERTIFICATE_FAILED = 4
IGEB_UNSUPPORTED = 5


class IgebError(Exception):
    """Exceptions thrown for all errors in igeb."""

    def __init__(self, message, status=None):
        super(Exception, self).__init__(message)

        self.message = message
        """``str``, error message for this exception"""

        self.status = status
        """``Optional[int]``, status code for this exception"""


class ConvergenceError(IgebError):
    """Newton iterations failed to reach the requested residual tolerance."""

    def __init__(self, message, *, residual, step=None):
        super().__init__(message, IGEB_SOLVER_ERROR)

        self.residual = residual
        """``float``, norm of the last residual"""

        self.step = step
        """``Optional[int]``, index of the failing time step"""


def exit_code(error: IgebError) -> int:
    """Process exit code corresponding to ``error``, as used by the command line."""
    if error.status == IGEB_SOLVER_ERROR:
        return 3
    elif error.status == IGEB_CERTIFICATE_FAILED:
        return 4
    else:
        return 2
