"""
Domain error hierarchy.

Every error carries the process exit code the CLI maps it to, so the
transport layer (cli/main.py) stays a thin translation table, in the same
way the HTTP layer of a web service maps service exceptions to status codes.

Exit-code contract:
    0 success, 1 usage/config, 2 physics (instability), 3 validity.
"""


class MechcatError(Exception):
    """Base class for all expected failures."""

    exit_code: int = 1


class ConfigError(MechcatError):
    """Malformed configuration, override, sweep spec or input file."""

    exit_code = 1


class UnstableSystemError(MechcatError):
    """The drift matrix has an eigenvalue with non-negative real part."""

    exit_code = 2

    def __init__(self, message: str, eigenvalue: complex | None = None) -> None:
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SolverFailureError(MechcatError):
    """A linear solve finished but missed its residual tolerance."""

    exit_code = 2


class ValidityError(MechcatError):
    """An approximation the model relies on is violated beyond its hard limit."""

    exit_code = 3


class TruncationLeakageError(MechcatError):
    """A truncated Fock construction lost more weight than the budget allows."""

    exit_code = 1

    def __init__(self, message: str, leakage: float) -> None:
        super().__init__(message)
        self.leakage = leakage


class NonPhysicalStateError(MechcatError):
    """A covariance matrix or density matrix violates a physicality condition."""

    exit_code = 1
