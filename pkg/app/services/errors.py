"""Error hierarchy shared by the numerical services."""

from __future__ import annotations

from typing import Optional

__all__ = [
    "AnalysisError",
    "ExportError",
    "InvalidDomainError",
    "InvalidInputError",
    "InvalidMaskError",
    "InvalidPathCountError",
    "NegativeFieldError",
    "NegativeValueWithFractionalPowerError",
    "NoBracketError",
    "NoConvergenceError",
    "NoZeroFoundError",
    "NonConvexDomainRefusedError",
    "NonPositiveIterateError",
    "NonpositiveScaleError",
    "NotNestedError",
    "PointOutsideDomainError",
    "ResolutionTooCoarseError",
    "SupercriticalRefusedError",
    "UnsupportedDimensionError",
    "UnsupportedKindError",
    "ZeroDenominatorError",
]


class AnalysisError(RuntimeError):
    """Base class for failures raised by the analysis services."""

    @property
    def code(self) -> str:
        return type(self).__name__.removesuffix("Error")

    def to_payload(self) -> dict[str, str]:
        return {"error": self.code, "message": str(self)}


class InvalidDomainError(AnalysisError):
    """Raised when a domain description cannot be parsed or is geometrically invalid."""


class InvalidInputError(AnalysisError):
    """Raised when numerical parameters violate an operation's preconditions."""


class ResolutionTooCoarseError(AnalysisError):
    """Raised when the grid spacing leaves too few cells across the inradius."""


class UnsupportedDimensionError(AnalysisError):
    """Raised when a grid operation is requested for a domain with n != 2."""


class InvalidMaskError(AnalysisError):
    """Raised when an occupancy grid is empty, disconnected or touches the frame."""


class NonpositiveScaleError(AnalysisError):
    """Raised when a domain is scaled by a non-positive factor."""


class NoConvergenceError(AnalysisError):
    """Raised when an iterative method exhausts its iteration budget."""


class NonPositiveIterateError(AnalysisError):
    """Raised when an eigen iterate loses strict positivity."""


class NegativeValueWithFractionalPowerError(AnalysisError):
    """Raised when a negative value would be raised to a non-integer power."""


class ZeroDenominatorError(AnalysisError):
    """Raised when a Rayleigh-type quotient is evaluated on the zero field."""


class NonConvexDomainRefusedError(AnalysisError):
    """Raised when a convex-only check receives a domain kind that may be non-convex."""


class NoBracketError(AnalysisError):
    """Raised when a shooting parameter cannot be bracketed."""


class SupercriticalRefusedError(AnalysisError):
    """Raised when shooting is requested at or above the critical exponent."""

    def __init__(self, message: str, *, regime: str) -> None:
        super().__init__(message)
        self.regime = regime

    def to_payload(self) -> dict[str, str]:
        payload = super().to_payload()
        payload["regime"] = self.regime
        return payload


class NoZeroFoundError(AnalysisError):
    """Raised when a radial profile never returns to zero inside the window."""


class NegativeFieldError(AnalysisError):
    """Raised when rearrangement receives a field with negative values."""


class NotNestedError(AnalysisError):
    """Raised when the inner domain's grid is not contained in the outer one."""


class PointOutsideDomainError(AnalysisError):
    """Raised when a random walk would start outside (or on) the domain."""


class UnsupportedKindError(AnalysisError):
    """Raised when no distance oracle exists for the requested domain kind."""


class InvalidPathCountError(AnalysisError):
    """Raised when a Monte Carlo estimate is requested with fewer than one path."""


class ExportError(AnalysisError):
    """Raised when report artifacts cannot be written."""

    def __init__(self, message: str, *, path: Optional[str] = None) -> None:
        super().__init__(message)
        self.path = path
