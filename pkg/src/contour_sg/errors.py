"""Exception types shared across the package."""


class ContourSGError(Exception):
    """Base class for all package errors."""


class ConfigError(ContourSGError, ValueError):
    """Invalid configuration or parameters."""


class InsufficientDataError(ContourSGError):
    """Too few unique samples to fit an interpolant."""


class NumericalError(ContourSGError):
    """A linear system could not be solved reliably."""


class DegenerateFieldError(ContourSGError):
    """An estimate has zero signal range."""


class ShapeError(ContourSGError, ValueError):
    """Grids being compared do not share a grid specification."""
