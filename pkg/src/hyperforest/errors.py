"""Exception hierarchy shared across the toolkit.

Every error carries an ``exit_code`` so the command-line layer can map
failures onto process exit statuses without a lookup table: 1 for
configuration problems, 2 for data problems, 3 for internal invariant
violations.
"""


class HyperForestError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class ConfigError(HyperForestError):
    """Invalid, incomplete, or contradictory configuration."""

    exit_code = 1


class DataError(HyperForestError):
    """Problem with input data, datasets, or persisted artifacts."""

    exit_code = 2


class InternalError(HyperForestError):
    """A code invariant was violated; indicates a bug, not bad input."""

    exit_code = 3


class ParseError(DataError):
    """A delimited file could not be parsed structurally."""


class UnreadableHeader(ParseError):
    """The header line of a delimited file is missing or unusable."""


class RecordRejected(DataError):
    """A contract row failed validation.

    ``field`` names the first offending field in canonical field order,
    ``reason`` is a short machine-stable tag used for curation tallies.
    """

    def __init__(self, reason: str, field: str, detail: str = ""):
        self.reason = reason
        self.field = field
        msg = f"{reason} ({field})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class IngestAborted(DataError):
    """Rejection rate exceeded the configured safety limit."""


class MissingYearFactor(DataError):
    """No purchasing-power conversion factor for a contract's year."""


class ClassAbsent(DataError):
    """An operation required rows from both classes but one was missing."""


class ImbalanceInverted(DataError):
    """The nominal minority class outnumbers the majority class."""


class SchemaMismatch(DataError):
    """A model and a dataset disagree about the feature schema."""


class ChecksumFailure(DataError):
    """A persisted model failed its integrity check."""


class LengthMismatch(DataError):
    """Paired sequences (predictions and labels) differ in length."""


class ThresholdUnset(DataError):
    """Classification was requested before a threshold was calibrated."""


class DegenerateBuyer(DataError):
    """A buyer-year group has maxima that make risk ratios undefined."""


class NoOobRows(DataError):
    """No tree had any out-of-bag rows; importance is undefined."""


class EmptyNode(InternalError):
    """A tree node ended up with zero training rows."""


class MissingAggregate(InternalError):
    """Feature assembly referenced a pair-year with no aggregate entry."""
