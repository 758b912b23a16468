"""Hypercubic XY fermion model: parameters, dispersion, coupling matrices.

The Hamiltonian on a periodic n^d lattice is

    H = sum_<ij> [c_i^dag c_j - gamma (c_i^dag c_j^dag + h.c.)] - 2 lam sum_i n_i

with each nearest-neighbour pair counted once.  In momentum space it has
``t_k = sum_a cos k_a - lam`` and ``delta_k = gamma sum_a sin k_a`` and the
quasiparticle energy ``2 * sqrt(t_k**2 + delta_k**2)``.  The
:func:`dispersion` helper returns the bare ``sqrt(t**2 + delta**2)``, so the
finite-lattice singular values are exactly twice that.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "MAX_SITES",
    "CouplingMatrices",
    "DispersionPoint",
    "ModelParams",
    "PhaseLabel",
    "Region",
    "build_couplings",
    "dispersion",
    "dispersion_terms",
    "neighbor",
    "phase_label",
]

#: Upper limit on ``n**d`` accepted by :func:`build_couplings` (dense L x L storage).
MAX_SITES = 4096


@dataclass(frozen=True)
class ModelParams:
    """Dimension ``d``, pairing ``gamma`` and chemical potential ``lam``."""

    d: int
    gamma: float
    lam: float

    def __post_init__(self) -> None:
        if self.d not in (1, 2, 3):
            raise InputError(f"dimension must be 1, 2 or 3, got {self.d!r}")
        for name in ("gamma", "lam"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InputError(f"{name} must be finite, got {value!r}")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class DispersionPoint:
    t: float
    delta: float
    energy: float


def dispersion_terms(gamma: float, lam: float, k):
    """Vectorised ``(t, delta, energy)`` for a sequence of per-axis momentum arrays.

    ``k`` is a sequence of ``d`` broadcast-compatible arrays.  Returns also the
    two direction sums ``sum cos k`` and ``sum sin k`` since most integrands
    need them.
    """
    cos_sum = sum(np.cos(ka) for ka in k)
    sin_sum = sum(np.sin(ka) for ka in k)
    t = cos_sum - lam
    delta = gamma * sin_sum
    return t, delta, np.hypot(t, delta), cos_sum, sin_sum


def dispersion(params: ModelParams, k) -> DispersionPoint:
    """Return ``t_k``, ``delta_k`` and ``Lambda_k`` at a single momentum."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.ndim != 1 or k.shape[0] != params.d:
        raise InputError(f"momentum has {k.size} components, model has d={params.d}")
    t, delta, energy, _, _ = dispersion_terms(params.gamma, params.lam, list(k))
    return DispersionPoint(float(t), float(delta), float(energy))


@dataclass(frozen=True)
class CouplingMatrices:
    """Dense hopping matrix ``a`` (symmetric) and pairing matrix ``b`` (antisymmetric)."""

    a: np.ndarray
    b: np.ndarray
    site_shape: tuple[int, ...]

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise InputError("coupling matrices must be square and of equal shape")
        if int(np.prod(self.site_shape)) != a.shape[0]:
            raise InputError("site_shape does not match matrix size")
        if not np.array_equal(a, a.T):
            raise InputError("hopping matrix must be exactly symmetric")
        if not np.array_equal(b, -b.T):
            raise InputError("pairing matrix must be exactly antisymmetric")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "site_shape", tuple(int(s) for s in self.site_shape))

    @property
    def total_sites(self) -> int:
        return self.a.shape[0]

    @classmethod
    def chain(cls, a, b) -> "CouplingMatrices":
        """Wrap arbitrary matrices as a 1-D ordering of sites."""
        a = np.asarray(a, dtype=float)
        return cls(a, b, (a.shape[0],))


def neighbor(site_shape, site: int, direction: int = 0) -> int:
    """Index of the periodic neighbour of ``site`` one step along +``direction``."""
    shape = tuple(site_shape)
    if not 0 <= direction < len(shape):
        raise InputError(f"direction {direction} outside 0..{len(shape) - 1}")
    total = int(np.prod(shape))
    if not 0 <= site < total:
        raise InputError(f"site {site} outside 0..{total - 1}")
    coords = list(np.unravel_index(site, shape))
    coords[direction] = (coords[direction] + 1) % shape[direction]
    return int(np.ravel_multi_index(tuple(coords), shape))


def build_couplings(d: int, n: int, gamma: float, lam: float, max_sites: int = MAX_SITES) -> CouplingMatrices:
    """Coupling matrices of the hypercubic model on a periodic ``n**d`` lattice.

    Sites are numbered in C order over the coordinates.  ``B[i, j] = -gamma``
    when ``j`` is the positive-direction neighbour of ``i`` so that
    ``1/2 sum c^dag B c^dag`` equals ``-gamma sum_<ij> c_i^dag c_j^dag``.
    """
    ModelParams(d, gamma, lam)
    if n < 3:
        raise InputError(f"need at least 3 sites per side for distinct periodic neighbours, got {n}")
    total = n**d
    if total > max_sites:
        raise InputError(f"{total} sites exceeds the limit of {max_sites}")
    shape = (n,) * d
    a = np.zeros((total, total))
    b = np.zeros((total, total))
    np.fill_diagonal(a, -2.0 * lam)
    for i in range(total):
        for direction in range(d):
            j = neighbor(shape, i, direction)
            a[i, j] = a[j, i] = 1.0
            b[i, j] = -gamma
            b[j, i] = gamma
    return CouplingMatrices(a, b, shape)


class Region(str, enum.Enum):
    GAPLESS = "gapless-degenerate"
    GAPPED = "gapped"
    FERMI_POINT = "fermi-surface-point"


@dataclass(frozen=True)
class PhaseLabel:
    region: Region
    critical_lambdas: tuple[float, ...] = field(default_factory=tuple)


def phase_label(params: ModelParams) -> PhaseLabel:
    """Analytic gap classification.

    Negative ``lam`` is handled through ``|lam|``: the particle-hole map
    ``k -> k + (pi, ..., pi)`` sends ``t -> -t`` at fixed ``|lam|`` and leaves
    the spectrum unchanged.

    The gap closes where ``sum cos k = lam`` and ``gamma sum sin k = 0``
    meet.  In one dimension with pairing that only happens at ``|lam| = 1``,
    so the 1-D chain is gapped on both sides of its critical point.
    """
    d, lam = params.d, abs(params.lam)
    critical = [float(d)]
    if d == 2 and params.gamma != 0.0:
        critical.insert(0, 0.0)
    if params.gamma == 0.0:
        region = Region.GAPLESS if lam <= d else Region.GAPPED
    elif d == 2 and lam == 0.0:
        region = Region.FERMI_POINT
    elif d == 1:
        region = Region.GAPLESS if lam == 1.0 else Region.GAPPED
    else:
        region = Region.GAPLESS if lam <= d else Region.GAPPED
    return PhaseLabel(region, tuple(critical))
