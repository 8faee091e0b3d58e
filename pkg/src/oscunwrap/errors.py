"""Exception hierarchy shared across the package."""


class OscUnwrapError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(OscUnwrapError):
    """Array shape or length does not match the operation's contract."""


class DomainError(OscUnwrapError):
    """Scalar argument outside its admissible range."""


class NotSymplectic(OscUnwrapError):
    """Matrix fails the symplectic invariant S^T J S = J.

    Carries the maximal entrywise deviation in ``defect``.
    """

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class NumericalFailure(OscUnwrapError):
    """A numerically required property (conditioning, factorization) failed."""


class SearchBudgetExceeded(OscUnwrapError):
    """Exact lattice enumeration exceeded its candidate budget."""


class BudgetExceeded(OscUnwrapError):
    """A brute-force grid or probe sweep exceeded its size budget."""


class ConfigError(OscUnwrapError):
    """Run configuration file is malformed or incomplete."""
