"""Exception types shared across the package.

Each class carries a ``category`` string used by the CLI as a
machine-readable error tag.
"""


class PolmemError(Exception):
    category = "error"


class InvalidArgument(PolmemError, ValueError):
    category = "validation"


class DomainError(PolmemError, ValueError):
    category = "validation"


class ValidationError(PolmemError, ValueError):
    category = "validation"


class IntegratorFailure(PolmemError, RuntimeError):
    category = "integrator-failure"


class CutoffOverflow(PolmemError, RuntimeError):
    category = "cutoff-overflow"

    def __init__(self, message, time=None, tail=None):
        super().__init__(message)
        self.time = time
        self.tail = tail


class OracleScaleExceeded(PolmemError, ValueError):
    category = "oracle-scale-exceeded"


class NoCrossing(PolmemError, ValueError):
    category = "no-crossing"
