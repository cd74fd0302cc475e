"""Exception hierarchy shared by the lab modules."""


class LabError(Exception):
    """Base class for all errors raised by nashlab."""


class ModelDomainError(LabError, ValueError):
    """Coefficient or density evaluation left the model's natural domain."""


class NotNormalizableError(LabError, ValueError):
    """The speed measure has infinite mass on the requested interval."""


class DiscretizationError(LabError, ValueError):
    """A generator matrix could not be built (bad interval, inaccessible boundary)."""


class NumericError(LabError, ArithmeticError):
    """Eigensolver or linear solver failure."""


class WindowError(LabError, ValueError):
    """Time window unsuitable for a decay fit."""


class ConfigError(LabError, ValueError):
    """Run configuration failed validation."""
