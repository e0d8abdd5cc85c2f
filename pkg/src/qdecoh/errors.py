"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` and ``ValidationError``
exit with 2, ``DomainError`` (and its subclasses) with 3.
"""


class QdecohError(Exception):
    """Base class for all package errors."""


class ConfigError(QdecohError, ValueError):
    """Malformed run configuration or command-line input."""


class DomainError(QdecohError, ValueError):
    """Input outside the mathematical domain of an operation.

    Raised for singular parameter sets, non-Hermitian operators, states
    that are not of X form, and similar.
    """


class ValidationError(QdecohError, ValueError):
    """A density matrix failed validation.

    The offending :class:`~qdecoh.qmath.DensityReport` is kept on
    ``self.report``.
    """

    def __init__(self, report, context=""):
        self.report = report
        msg = "; ".join(f"{v.kind}: {v.message}" for v in report.violations)
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class TruncationError(DomainError):
    """Kraus series did not reach the requested tolerance."""


class StabilityError(DomainError):
    """Fixed-step integration drifted; use a smaller step."""
