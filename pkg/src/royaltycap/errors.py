"""Exception hierarchy for royaltycap.

Public functions raise these instead of bare ValueError so callers can map
failures to exit codes (config errors vs. verification failures) without
string matching.
"""


class RoyaltycapError(Exception):
    """Base class for all package errors."""


class ConstructionError(RoyaltycapError, ValueError):
    """Distribution or instance parameters violate a construction contract."""


class DomainError(RoyaltycapError, ValueError):
    """Evaluation point lies outside the object's support."""


class RegularityError(RoyaltycapError):
    """A regularity precondition (single crossing, monotone virtual value)
    fails on the evaluation grid, so the requested quantity is ill-defined."""


class ReportRejectedError(RoyaltycapError, ValueError):
    """Income report lies outside the support implied by the type report."""


class UnsupportedInstanceError(RoyaltycapError):
    """Operation is defined only for a restricted class of instances."""


class UnsupportedPairError(RoyaltycapError):
    """Report pair violates the preconditions of the crossing construction."""


class InvalidNoiseError(RoyaltycapError):
    """Audit-signal noise fails the unbiasedness calibration."""


class InvalidAxisError(RoyaltycapError):
    """Comparative-statics axis values are invalid or unordered."""


class ConfigError(RoyaltycapError, ValueError):
    """Configuration file is malformed; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)
