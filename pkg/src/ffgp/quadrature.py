"""Midpoint-rule integration over the Brillouin zone ``[-pi, pi)^d``.

The grid ``k = -pi + (2m + 1) pi / N`` never contains ``k = 0`` or
``k = pi``, which is where the hypercubic gap closes.  The tensor grid is
split into slabs along the first axis.  The slab size depends only on ``N``
and ``d``, each slab is summed with ``numpy.sum`` and the slab sums are
combined by a fixed pairwise tree, so the result does not depend on how many
worker threads evaluated the slabs.  The worker count comes from the
``FFGP_WORKERS`` environment variable (default: number of CPUs).
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, IntegrandError

__all__ = [
    "DEFAULT_POINTS",
    "IntegralResult",
    "QuadratureSpec",
    "default_spec",
    "integrate_bz",
    "midpoint_nodes",
    "refine_until",
    "worker_count",
]

log = logging.getLogger(__name__)

#: Finest grid size per axis used when no spec is given.
DEFAULT_POINTS = {1: 4096, 2: 1024, 3: 192}
WORKERS_ENV = "FFGP_WORKERS"
_SLAB_POINTS = 1 << 18

Integrand = Callable[[Sequence[np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid size, number of refinement levels and relative tolerance.

    :func:`integrate_bz` treats ``points_per_axis`` as the finest level and
    evaluates ``refinement_levels`` grids halving downward from it.
    :func:`refine_until` starts at ``points_per_axis`` and doubles upward.
    """

    points_per_axis: int
    refinement_levels: int = 3
    rel_tol: float = 1e-6

    def __post_init__(self) -> None:
        n = self.points_per_axis
        if n < 8 or n % 2:
            raise InputError(f"points_per_axis must be even and >= 8, got {n}")
        if self.refinement_levels < 1:
            raise InputError("refinement_levels must be >= 1")
        if not self.rel_tol > 0:
            raise InputError("rel_tol must be positive")

    def descending_sizes(self) -> list[int]:
        n, levels = self.points_per_axis, self.refinement_levels
        step = 1 << (levels - 1)
        if n % step or (n // step) % 2:
            raise InputError(
                f"points_per_axis={n} cannot be halved {levels - 1} times onto even grids"
            )
        return [n // (1 << j) for j in range(levels - 1, -1, -1)]


def default_spec(d: int, **overrides) -> QuadratureSpec:
    return QuadratureSpec(overrides.pop("points_per_axis", DEFAULT_POINTS[d]), **overrides)


@dataclass(frozen=True)
class IntegralResult:
    """Value from the finest grid and the change from the previous grid.

    ``value`` and ``error_estimate`` are floats for scalar integrands and
    arrays for integrands with a leading component axis.
    """

    value: float | np.ndarray
    error_estimate: float | np.ndarray
    points_used: int
    converged: bool
    levels: tuple = field(default=(), repr=False)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError as exc:
        raise InputError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from exc
    if count < 1:
        raise InputError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return count


def midpoint_nodes(n: int) -> np.ndarray:
    return -np.pi + (2 * np.arange(n) + 1) * np.pi / n


def _tree_sum(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        paired = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            paired.append(parts[-1])
        parts = paired
    return parts[0]


def _slab_sum(f: Integrand, nodes: np.ndarray, d: int, rows: slice) -> np.ndarray:
    axes = [nodes[rows]] + [nodes] * (d - 1)
    k = np.meshgrid(*axes, indexing="ij", sparse=True)
    shape = tuple(len(a) for a in axes)
    values = np.asarray(f(k), dtype=float)
    lead = values.shape[: values.ndim - d] if values.ndim >= d else ()
    values = np.broadcast_to(values, lead + shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.argwhere(bad)[0][len(lead):]
        point = tuple(float(a.ravel()[i]) for a, i in zip(axes, idx))
        raise IntegrandError(f"non-finite integrand value at k={point}", point)
    return values.sum(axis=tuple(range(len(lead), len(lead) + d)))


def _grid_integral(f: Integrand, d: int, n: int, workers: int) -> np.ndarray:
    nodes = midpoint_nodes(n)
    rows_per_slab = max(1, _SLAB_POINTS // n ** (d - 1))
    slabs = [slice(s, min(s + rows_per_slab, n)) for s in range(0, n, rows_per_slab)]
    if workers > 1 and len(slabs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda rows: _slab_sum(f, nodes, d, rows), slabs))
    else:
        parts = [_slab_sum(f, nodes, d, rows) for rows in slabs]
    return _tree_sum(parts) * (2 * np.pi / n) ** d


def _finish(values: list[np.ndarray], sizes: list[int], d: int, rel_tol: float) -> IntegralResult:
    value = values[-1]
    if len(values) > 1:
        error = np.abs(values[-1] - values[-2])
        converged = bool(np.all(error <= rel_tol * np.maximum(1.0, np.abs(value))))
    else:
        error = np.full_like(value, math.inf)
        converged = False
    if not converged:
        log.warning("quadrature not converged at N=%d (error %s)", sizes[-1], error)
    scalar = np.ndim(value) == 0
    return IntegralResult(
        value=float(value) if scalar else value,
        error_estimate=float(error) if scalar else error,
        points_used=int(sum(n**d for n in sizes)),
        converged=converged,
        levels=tuple(zip(sizes, (float(v) if scalar else v for v in values))),
    )


def _check_dim(d: int) -> None:
    if d not in (1, 2, 3):
        raise InputError(f"dimension must be 1, 2 or 3, got {d!r}")


def integrate_bz(f: Integrand, d: int, spec: QuadratureSpec | None = None) -> IntegralResult:
    """Integrate ``f`` over ``[-pi, pi)^d`` on a ladder of midpoint grids.

    Parameters
    ----------
    f
        Called with a list of ``d`` broadcastable coordinate arrays (an open
        mesh).  Returns values of the mesh shape, optionally with leading
        component axes for several integrands at once.
    d
        Dimension of the zone.
    spec
        Grid ladder.  The finest grid has ``spec.points_per_axis`` points per
        axis and determines ``value``; ``error_estimate`` is the absolute
        difference to the next coarser grid.

    Raises
    ------
    IntegrandError
        If any sample is NaN or infinite; the exception carries the momentum.
    """
    _check_dim(d)
    spec = spec or default_spec(d)
    sizes = spec.descending_sizes()
    workers = worker_count()
    values = [_grid_integral(f, d, n, workers) for n in sizes]
    return _finish(values, sizes, d, spec.rel_tol)


def refine_until(f: Integrand, d: int, spec: QuadratureSpec | None = None) -> IntegralResult:
    """Double the grid from ``spec.points_per_axis`` until two levels agree.

    Stops when successive values differ by less than
    ``rel_tol * max(1, |value|)`` or after ``refinement_levels`` grids.  An
    unconverged result is returned with ``converged=False``.
    """
    _check_dim(d)
    spec = spec or default_spec(d)
    workers = worker_count()
    sizes: list[int] = []
    values: list[np.ndarray] = []
    n = spec.points_per_axis
    for _ in range(spec.refinement_levels):
        sizes.append(n)
        values.append(_grid_integral(f, d, n, workers))
        if len(values) > 1:
            diff = np.abs(values[-1] - values[-2])
            if np.all(diff <= spec.rel_tol * np.maximum(1.0, np.abs(values[-1]))):
                break
        n *= 2
    return _finish(values, sizes, d, spec.rel_tol)
