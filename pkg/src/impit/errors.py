"""Exception hierarchy shared across the toolkit.

Reason codes are stable strings: the CLI prints them, the HTTP service
returns them in error bodies, and calibration maps store them for
undefined cells.
"""


class ImpitError(Exception):
    """Base class; carries a machine-readable reason code."""

    reason = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class ValidationError(ImpitError):
    """Bad user input: malformed files, out-of-range parameters."""

    reason = "validation"


class IngestError(ValidationError):
    """File-level problems detected while reading a signal or episode CSV."""

    reason = "ingest"


class GridGapError(IngestError):
    """A regular time grid has missing steps."""

    reason = "grid_gap"


class DomainError(ImpitError):
    """Mathematically undefined request (log of non-positive sum, etc.)."""

    reason = "domain"


class UndefinedCorrelationError(DomainError):
    """Pearson r is undefined: constant input on one side."""

    reason = "constant_series"


class ConfigError(ImpitError):
    """Inconsistent configuration (missing precomputed intensity, ...)."""

    reason = "config"
