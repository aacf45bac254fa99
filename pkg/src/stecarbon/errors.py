"""Exception hierarchy.

Every error a user can trigger with bad input derives from :class:`StecError`;
the CLI maps those to exit code 2 and anything else to exit code 1.
"""

from __future__ import annotations


class StecError(ValueError):
    """Base class for user and data errors."""


class ValidationError(StecError):
    """A value or document violates a documented precondition."""


class IngestError(StecError):
    """One or more rows of an input file could not be ingested."""

    def __init__(self, path: str, row_errors: list[str]):
        self.path = path
        self.row_errors = list(row_errors)
        shown = "; ".join(self.row_errors[:5])
        more = len(self.row_errors) - 5
        if more > 0:
            shown += f"; ... ({more} more)"
        super().__init__(f"{path}: {shown}")


class IntensityError(StecError):
    """Carbon intensity is undefined for the given mix."""


class ResolutionError(StecError):
    """Data is too coarse for the requested bucket kind."""


class CoverageError(StecError):
    """Required spatial units or periods have no data."""


class CalibrationError(StecError):
    """Published figures cannot be split into the requested terms."""


class UnsupportedGranularityError(StecError):
    """The (spatial, temporal) cell has no model."""


class ConfigError(StecError):
    """Project configuration is malformed."""
