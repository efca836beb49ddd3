"""Exception and warning types shared across estimkit.

Every error carries a short machine-readable ``code`` and a distinct process
``exit_code`` so the CLI can map failures without string matching.
"""

from __future__ import annotations


class EstimkitError(Exception):
    code = "error"
    exit_code = 1

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.location is not None:
            out["location"] = self.location
        return out


class UsageError(EstimkitError):
    code = "usage"
    exit_code = 2


class EmptySample(EstimkitError, ValueError):
    code = "empty_sample"
    exit_code = 10


class BadGrid(EstimkitError, ValueError):
    code = "bad_grid"
    exit_code = 11


class GridMismatch(EstimkitError, ValueError):
    code = "grid_mismatch"
    exit_code = 12


class DegenerateDensity(EstimkitError, ValueError):
    code = "degenerate_density"
    exit_code = 13


class BadOrder(EstimkitError, ValueError):
    code = "bad_order"
    exit_code = 20


class Underdetermined(EstimkitError, ValueError):
    code = "underdetermined"
    exit_code = 21


class IllConditioned(EstimkitError, ValueError):
    code = "ill_conditioned"
    exit_code = 22


class ZeroMarginal(EstimkitError, ValueError):
    code = "zero_marginal"
    exit_code = 23


class NonPositivePrice(EstimkitError, ValueError):
    code = "non_positive_price"
    exit_code = 30


class TooShort(EstimkitError, ValueError):
    code = "too_short"
    exit_code = 31


class BadWindow(EstimkitError, ValueError):
    code = "bad_window"
    exit_code = 32


class BadCovariance(EstimkitError, ValueError):
    code = "bad_covariance"
    exit_code = 40


class BadBandwidth(EstimkitError, ValueError):
    code = "bad_bandwidth"
    exit_code = 41


class BadParams(EstimkitError, ValueError):
    code = "bad_params"
    exit_code = 42


class ParseError(EstimkitError, ValueError):
    code = "parse_error"
    exit_code = 50


class DomainWarning(UserWarning):
    """Polynomial density evaluated outside its fitted domain."""


class NegativeMassWarning(UserWarning):
    """Polynomial density takes negative values somewhere on its domain."""


class NonUniformSpacingWarning(UserWarning):
    """Price timestamps are not evenly spaced."""
