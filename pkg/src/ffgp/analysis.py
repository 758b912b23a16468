"""Finite-difference derivatives in ``lam``, singularity scans and log fits.

Derivatives of the infinite-lattice quantities are taken from the radial
route (:mod:`ffgp.walk`), whose values are accurate to ~1e-15 even next to
the gap closing.  Tensor-grid values jitter as gap nodes cross grid points,
which ruins second differences at small steps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .correlators import phase_from_p3, zone_averages
from .errors import FitError, InputError, IntegrandError
from .model import ModelParams, phase_label

__all__ = [
    "DerivativeEstimate",
    "EPSILONS",
    "Quantity",
    "ScalingFit",
    "SingularityReport",
    "ThermoEvaluator",
    "critical_scan",
    "derivative",
    "five_point",
    "scaling_fit",
    "van_hove_points",
]

EPSILONS = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    order: int
    step: float
    error_estimate: float


def five_point(f: Callable[[float], float], x0: float, order: int, h: float) -> float:
    values = {}
    for m in (-2, -1, 0, 1, 2):
        if order == 1 and m == 0:
            continue
        x = x0 + m * h
        y = f(x)
        if not math.isfinite(y):
            raise IntegrandError(f"non-finite function value at lam={x!r}", x)
        values[m] = y
    if order == 1:
        return (-values[2] + 8 * values[1] - 8 * values[-1] + values[-2]) / (12 * h)
    return (-values[2] + 16 * values[1] - 30 * values[0] + 16 * values[-1] - values[-2]) / (12 * h * h)


def derivative(f: Callable[[float], float], lambda0: float, order: int = 1, h: float = 1e-3) -> DerivativeEstimate:
    """Five-point central difference of ``f`` at ``lambda0``.

    ``error_estimate`` is the change when the step is halved; ``value`` uses
    step ``h``.
    """
    if order not in (1, 2):
        raise InputError("derivative order must be 1 or 2")
    if not h > 0:
        raise InputError("step must be positive")
    coarse = five_point(f, lambda0, order, h)
    fine = five_point(f, lambda0, order, h / 2)
    return DerivativeEstimate(coarse, order, h, abs(coarse - fine))


class Quantity(str, enum.Enum):
    C_TWO = "c_II"
    PHASE = "gamma_g"


class ThermoEvaluator:
    """Memoised infinite-lattice ``c_II`` and ``gamma_g`` as functions of ``lam``.

    The radial route gives all correlators from one pass, so both quantities
    share every evaluation and stencils reuse points.
    """

    def __init__(self, d: int, gamma: float, method: str = "walk", spec=None):
        ModelParams(d, gamma, 0.0)
        self.d, self.gamma, self.method, self.spec = d, gamma, method, spec
        self._cache: dict[float, tuple] = {}

    def averages(self, lam: float) -> tuple:
        """``((p3, p11, p22), error, converged)`` at ``lam``, memoised."""
        key = float(lam)
        if key not in self._cache:
            self._cache[key] = zone_averages(ModelParams(self.d, self.gamma, key), self.spec, self.method)
        return self._cache[key]

    def values(self, lam: float) -> tuple[float, float]:
        """``(c_II, gamma_g)`` at ``lam``."""
        (p3, p11, p22), _, _ = self.averages(lam)
        p33 = p3 * p3 - p11 * p22
        c_two = 0.5 * (abs(p11 - p22) - abs(1.0 - p33))
        return float(c_two), phase_from_p3(float(p3))

    def function(self, quantity: Quantity | str) -> Callable[[float], float]:
        index = 0 if Quantity(quantity) is Quantity.C_TWO else 1
        return lambda lam: self.values(lam)[index]


def step_for(epsilon: float, h_max: float = 1e-3) -> float:
    """Stencil step that keeps all five points on one side of the candidate."""
    return min(h_max, epsilon / 10)


class Classification(str, enum.Enum):
    DIVERGENT_FIRST = "divergent-first-derivative"
    DIVERGENT_SECOND = "divergent-second-derivative"
    CUSP = "cusp-finite-second"
    REGULAR = "regular"


@dataclass(frozen=True)
class SingularityReport:
    """Classification of one candidate point.

    ``growth_factors`` lists ``(side, epsilon, |first derivative|, |second
    derivative|)`` for every sample taken; ``failures`` lists samples whose
    evaluation raised.
    """

    lambda_star: float
    quantity: str
    classification: Classification
    growth_factors: tuple = ()
    failures: tuple = field(default=())


def van_hove_points(d: int) -> tuple[float, ...]:
    """``|lam|`` values where the density of ``sum exp(i k)`` is singular.

    Non-analytic behaviour in ``lam`` can only appear at these points or at
    the band edge ``lam = d``; in ``d = 3`` the point ``lam = 1`` is a finite
    cusp, not a phase transition.
    """
    return {1: (1.0,), 2: (0.0, 2.0), 3: (1.0, 3.0)}[d]


def _unbounded(magnitudes: Sequence[float], persistence: float) -> bool:
    """Strictly growing, with per-decade increments that do not die out.

    A sequence converging to a finite limit has increments shrinking
    geometrically as epsilon drops by decades; a logarithmic divergence keeps
    them roughly constant and a power law makes them grow.
    """
    if len(magnitudes) < 3:
        return False
    steps = np.diff(magnitudes)
    if np.any(steps <= 0):
        return False
    return bool(np.all(steps[1:] >= persistence * steps[:-1]))


def _persistent_jump(jumps: Sequence[float], persistence: float, floor: float) -> bool:
    """One-sided limits differ: the gap between sides does not close as epsilon shrinks."""
    if len(jumps) < 2:
        return False
    return jumps[-1] > floor and jumps[-1] >= persistence * jumps[-2]


def _classify(samples, persistence: float, floor: float) -> Classification:
    sides: dict[int, dict[float, tuple[float, float]]] = {}
    for side, eps, first, second in samples:
        sides.setdefault(side, {})[eps] = (first, second)
    for order in (0, 1):
        for rows in sides.values():
            mags = [abs(rows[e][order]) for e in sorted(rows, reverse=True)]
            if _unbounded(mags, persistence):
                return (Classification.DIVERGENT_FIRST, Classification.DIVERGENT_SECOND)[order]
    if len(sides) == 2:
        below, above = sides[-1], sides[1]
        shared = sorted(set(below) & set(above), reverse=True)
        for order in (0, 1):
            jumps = [abs(above[e][order] - below[e][order]) for e in shared]
            if _persistent_jump(jumps, persistence, floor):
                return Classification.CUSP
    return Classification.REGULAR


def critical_scan(
    d: int,
    gamma: float,
    lambda_grid: Iterable[float],
    quantity: Quantity | str,
    epsilons: Sequence[float] = EPSILONS,
    extra_candidates: Iterable[float] = (),
    h_max: float = 1e-3,
    persistence: float = 0.5,
    jump_floor: float = 1e-6,
    evaluator: ThermoEvaluator | None = None,
) -> list[SingularityReport]:
    """Classify the behaviour of ``quantity`` at candidate points inside the grid range.

    Candidates are the analytic critical points, the van Hove points of the
    lattice and ``extra_candidates``, restricted to
    ``[min(lambda_grid), max(lambda_grid)]``.  At each candidate the first and
    second derivatives are sampled at ``lambda_star +/- epsilon`` with step
    ``min(h_max, epsilon / 10)``.  A derivative counts as divergent when its
    magnitude grows strictly as epsilon shrinks and the growth per decade
    does not decay by more than the factor ``persistence``; a finite
    derivative whose two one-sided values stay apart is reported as a cusp.
    """
    grid = sorted(float(x) for x in lambda_grid)
    if not grid:
        raise InputError("lambda grid is empty")
    if len(epsilons) < 3 or any(e <= 0 for e in epsilons):
        raise InputError("need at least three positive epsilon values")
    quantity = Quantity(quantity)
    evaluator = evaluator or ThermoEvaluator(d, gamma)
    f = evaluator.function(quantity)
    label = phase_label(ModelParams(d, gamma, grid[0]))
    candidates = set(label.critical_lambdas) | set(van_hove_points(d)) | {float(x) for x in extra_candidates}
    candidates = sorted(c for c in candidates if grid[0] <= c <= grid[-1])
    reports = []
    for star in candidates:
        samples, failures = [], []
        for side in (-1, 1):
            for eps in sorted(epsilons, reverse=True):
                x0 = star + side * eps
                h = step_for(eps, h_max)
                try:
                    first = five_point(f, x0, 1, h)
                    second = five_point(f, x0, 2, h)
                except (ArithmeticError, ValueError) as exc:
                    failures.append((side, eps, str(exc)))
                    continue
                samples.append((side, eps, first, second))
        reports.append(
            SingularityReport(
                lambda_star=star,
                quantity=quantity.value,
                classification=_classify(samples, persistence, jump_floor),
                growth_factors=tuple(samples),
                failures=tuple(failures),
            )
        )
    return reports


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line through ``(log10(epsilon / lambda_c), second derivative)``."""

    slope: float
    intercept: float
    r_squared: float
    samples: tuple
    degenerate: bool = False


def scaling_fit(
    quantity: Quantity | str | Callable[[float], float],
    lambda_c: float,
    epsilons: Sequence[float],
    side: int = -1,
    d: int = 3,
    gamma: float = 1.0,
    h_max: float = 1e-3,
    evaluator: ThermoEvaluator | None = None,
) -> ScalingFit:
    """Fit the second derivative at ``lambda_c + side * epsilon`` against ``log10(epsilon / lambda_c)``.

    ``quantity`` is either a quantity name, evaluated for the model ``(d,
    gamma)``, or any callable of ``lam``.  Samples that fail to evaluate are
    dropped; fewer than three remaining samples raise :class:`FitError`.  A
    constant response gives slope 0 and ``degenerate=True``.
    """
    if side not in (-1, 1):
        raise InputError("side must be -1 or +1")
    if lambda_c <= 0:
        raise InputError("lambda_c must be positive for a relative logarithm")
    if any(e <= 0 for e in epsilons):
        raise InputError("epsilons must be positive")
    if callable(quantity):
        f = quantity
    else:
        f = (evaluator or ThermoEvaluator(d, gamma)).function(quantity)
    samples = []
    for eps in sorted(epsilons, reverse=True):
        try:
            value = five_point(f, lambda_c + side * eps, 2, step_for(eps, h_max))
        except (ArithmeticError, ValueError):
            continue
        samples.append((math.log10(eps / lambda_c), value))
    if len(samples) < 3:
        raise FitError(f"only {len(samples)} usable samples; need at least 3")
    x = np.array([s[0] for s in samples])
    y = np.array([s[1] for s in samples])
    spread = float(np.sum((y - y.mean()) ** 2))
    if spread <= 1e-24 * max(1.0, float(np.sum(y * y))):
        return ScalingFit(0.0, float(y.mean()), 0.0, tuple(samples), degenerate=True)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    r_squared = min(1.0, max(0.0, 1.0 - residual / spread))
    return ScalingFit(float(slope), float(intercept), r_squared, tuple(samples))
