"""Infinite-lattice two-site correlators and ground-state geometric phase.

All quantities are zone averages of ratios built from ``t_k``, ``delta_k`` and
``Lambda_k``.  Two evaluation routes are available:

``"grid"``
    Midpoint tensor grid from :mod:`ffgp.quadrature`; the error estimate is
    the change between the two finest grids.
``"walk"``
    Radial reduction from :mod:`ffgp.walk`; the error estimate is the change
    between two Gauss-Legendre orders.  Much more accurate near the gap
    closing, and the route used for derivatives.

Where ``Lambda_k`` vanishes the ratios are set to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import ModelParams, dispersion_terms
from .quadrature import QuadratureSpec, default_spec, integrate_bz
from .walk import walk_average

__all__ = [
    "CorrelationSet",
    "GeometricPhaseResult",
    "METHODS",
    "correlations_tl",
    "geometric_phase_tl",
    "gp_gamma_zero",
    "zone_averages",
]

METHODS = ("grid", "walk")
_WALK_ORDERS = (16, 12)


@dataclass(frozen=True)
class CorrelationSet:
    """Two-site correlators ``p_ab = <sigma^a_i sigma^b_j>``.

    ``error_estimate``, ``converged`` and ``degenerate`` carry numerical
    diagnostics: quadrature error and convergence for infinite-lattice values,
    a zero-mode flag for finite lattices.
    """

    p03: float
    p30: float
    p11: float
    p22: float
    p33: float
    p12: float = 0.0
    p21: float = 0.0
    p00: float = 1.0
    error_estimate: float = 0.0
    converged: bool = True
    degenerate: bool = False

    def as_matrix(self) -> np.ndarray:
        """4x4 table ``T[a, b] = p_ab`` with the entries not stored set to zero."""
        table = np.zeros((4, 4))
        table[0, 0] = self.p00
        table[0, 3], table[3, 0] = self.p03, self.p30
        table[1, 1], table[2, 2], table[3, 3] = self.p11, self.p22, self.p33
        table[1, 2], table[2, 1] = self.p12, self.p21
        return table

    def swapped(self) -> "CorrelationSet":
        """Same state with the two sites exchanged."""
        return CorrelationSet(
            p03=self.p30, p30=self.p03, p11=self.p11, p22=self.p22, p33=self.p33,
            p12=self.p21, p21=self.p12, p00=self.p00, error_estimate=self.error_estimate,
            converged=self.converged, degenerate=self.degenerate,
        )


@dataclass(frozen=True)
class GeometricPhaseResult:
    """Berry phase under a ``pi`` rotation of the particle number.

    For ``gamma = 0`` ``alternative`` holds the value for the no-pairing
    choice of quasiparticles (all ``h = 0``), which is always 0.
    """

    gamma_g: float
    error_estimate: float = 0.0
    converged: bool = True
    alternative: float | None = None


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise InputError(f"method must be one of {METHODS}, got {method!r}")


def _safe_inverse(energy: np.ndarray, scale: float) -> np.ndarray:
    zero = energy <= 1e-14 * scale
    with np.errstate(divide="ignore"):
        return np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, energy))


def _ratios(t, cos_sum, sin_sum, gamma: float, d: int, scale: float) -> np.ndarray:
    delta = gamma * sin_sum
    inv = _safe_inverse(np.hypot(t, delta), scale)
    pairing = delta * sin_sum
    hopping = t * cos_sum
    return np.stack(
        np.broadcast_arrays(t * inv, (pairing - hopping) * inv / d, -(pairing + hopping) * inv / d)
    )


def zone_averages(params: ModelParams, spec: QuadratureSpec | None = None, method: str = "grid"):
    """Zone averages of ``t/Lambda`` and the two bond ratios.

    Returns ``(values, error, converged)`` with ``values = (p3, p11, p22)``.
    """
    _check_method(method)
    d, gamma, lam = params.d, params.gamma, params.lam
    scale = d + abs(lam)
    if method == "grid":
        def integrand(k):
            t, _, _, cos_sum, sin_sum = dispersion_terms(gamma, lam, k)
            return _ratios(t, cos_sum, sin_sum, gamma, d, scale)

        result = integrate_bz(integrand, d, spec or default_spec(d))
        volume = (2 * np.pi) ** d
        return result.value / volume, result.error_estimate / volume, result.converged

    def reduced(t, cos_sum, sin_sum):
        return _ratios(t, cos_sum, sin_sum, gamma, d, scale)

    fine, coarse = (walk_average(reduced, d, lam, gamma, order=o) for o in _WALK_ORDERS)
    return fine, np.abs(fine - coarse), True


def correlations_tl(params: ModelParams, spec: QuadratureSpec | None = None, method: str = "grid") -> CorrelationSet:
    """Nearest-neighbour correlators of the infinite hypercubic lattice.

    The bond correlators are averaged over the ``d`` lattice directions.
    ``p33`` follows from Wick's theorem, ``p33 = p3**2 - p11 * p22``.
    """
    (p3, p11, p22), error, converged = zone_averages(params, spec, method)
    return CorrelationSet(
        p03=float(p3), p30=float(p3), p11=float(p11), p22=float(p22),
        p33=float(p3 * p3 - p11 * p22),
        error_estimate=float(np.max(error)), converged=converged,
    )


def geometric_phase_tl(params: ModelParams, spec: QuadratureSpec | None = None, method: str = "grid") -> GeometricPhaseResult:
    """``gamma_g = (pi/2) * mean over the zone of (1 - t/Lambda)``, in ``[0, pi]``."""
    _check_method(method)
    d, gamma, lam = params.d, params.gamma, params.lam
    scale = d + abs(lam)

    def weight(t, sin_sum):
        inv = _safe_inverse(np.hypot(t, gamma * sin_sum), scale)
        return 0.5 * np.pi * (1.0 - t * inv)

    if method == "grid":
        def integrand(k):
            t, _, _, _, sin_sum = dispersion_terms(gamma, lam, k)
            return weight(t, sin_sum)

        result = integrate_bz(integrand, d, spec or default_spec(d))
        volume = (2 * np.pi) ** d
        value, error, converged = result.value / volume, result.error_estimate / volume, result.converged
    else:
        fine, coarse = (
            walk_average(lambda t, c, s: weight(t, s), d, lam, gamma, order=o) for o in _WALK_ORDERS
        )
        value, error, converged = fine, abs(fine - coarse), True
    return GeometricPhaseResult(float(value), float(error), converged)


def gp_gamma_zero(params: ModelParams, spec: QuadratureSpec | None = None, method: str = "grid") -> GeometricPhaseResult:
    """Geometric phase without pairing.

    With ``Lambda = |t|`` the phase is ``pi`` times the filled fraction of the
    zone (``t < 0``), the ``t = 0`` surface counting one half.  If instead
    the quasiparticles are chosen as the bare fermions (``h = 0``) the phase
    is 0; that value is reported in ``alternative``.
    """
    if params.gamma != 0.0:
        raise InputError("gp_gamma_zero requires gamma = 0")
    result = geometric_phase_tl(params, spec, method)
    return GeometricPhaseResult(result.gamma_g, result.error_estimate, result.converged, alternative=0.0)


def phase_from_p3(p3: float) -> float:
    """``gamma_g`` from the site magnetisation ``p3`` (same zone average)."""
    return 0.5 * math.pi * (1.0 - p3)
