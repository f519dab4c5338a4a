"""Exception types shared across the package."""


class IceFactorError(Exception):
    """Base class for all package errors."""


class InputError(IceFactorError):
    """Malformed or inconsistent input data (CLI exit code 1)."""


class NumericalError(IceFactorError):
    """Numerical failure during filtering or estimation (CLI exit code 2).

    ``period`` carries the time index at which the failure occurred, when
    one is identifiable; ``block`` names the offending estimation block.
    """

    def __init__(self, message: str, period: int | None = None,
                 block: str | None = None):
        super().__init__(message)
        self.period = period
        self.block = block
