"""Exception hierarchy shared by all modules."""


class CpballError(Exception):
    """Base class for every error raised by the package."""


class StructuralError(CpballError, ValueError):
    """Operands do not fit together (mixed algebras, bad tables, non-Hermitian input)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedOperationError(CpballError, NotImplementedError):
    """The operation is not defined for this kind of algebra."""


class DomainError(CpballError, ValueError):
    """An argument lies outside the set where the map is defined."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotPositiveDefiniteError(CpballError):
    """A Gram matrix that had to be positive failed the PSD test."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class IllConditionedError(CpballError):
    """A linear solve left a residual above tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class DegreeCapError(CpballError):
    """Polynomial fit of the requested degree does not reproduce the samples."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class RankDeficientError(CpballError):
    """Training samples do not span the required coordinate space."""

    def __init__(self, message=None, achieved=None, required=None):
        super().__init__(message or f"training span has dimension {achieved}, need "
                         f"{required}; supply more samples")
        self.achieved = achieved
        self.required = required


class NotRepresentationError(CpballError):
    """A map claimed to be a *-representation is not multiplicative."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotMinimalError(CpballError):
    """A dilation is not minimal; rerun gns_construct to obtain one."""


class ConfigError(CpballError, ValueError):
    """Experiment configuration does not validate."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
