"""Exception types shared across the package."""

from __future__ import annotations


class InputError(ValueError):
    """Invalid parameters or arguments."""


class IntegrandError(ArithmeticError):
    """An integrand returned a non-finite value.

    ``point`` holds the offending momentum (or other abscissa).
    """

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class UnphysicalInputError(ValueError):
    """Correlators that cannot come from a density matrix."""


class FitError(ValueError):
    """Not enough usable samples for a regression."""
