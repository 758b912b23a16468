"""Zone averages of functions of ``(sum cos k, sum sin k)``.

Every hypercubic integrand depends on the momentum only through
``Z = sum_a exp(i k_a)``.  For uniformly distributed momenta ``Z`` is the
endpoint of a ``d``-step planar random walk with unit steps, so a
``d``-dimensional zone average reduces to

    E[F] = int_0^d p_d(r) (1/pi) int_0^pi F(r cos th, r sin th) dth dr

for ``F`` even in its second argument.  ``p_2(r) = 2 / (pi sqrt(4 - r^2))``
and ``p_3`` is a hypergeometric expression with a logarithmic singularity at
``r = 1``.  Both integrals use composite Gauss-Legendre panels graded
geometrically toward every point where the integrand or the density is
non-smooth, which resolves the gap-closing region far better than a tensor
grid and makes finite differences in ``lam`` usable down to ``|lam - lam_c|``
of order 1e-4.
"""

from __future__ import annotations

import functools
import math
from typing import Callable

import numpy as np
from scipy.special import digamma, hyp2f1

from .errors import InputError, IntegrandError

__all__ = ["walk_average", "walk_density"]

_ROW_BLOCK = 1 << 20
_MAX_DEPTH = 40
_SERIES_TERMS = 120
_SERIES_N = np.arange(_SERIES_TERMS)
_SERIES_COEF = np.exp(
    np.cumsum(np.log(np.r_[1.0, ((_SERIES_N[:-1] + 1 / 3) * (_SERIES_N[:-1] + 2 / 3)) / (_SERIES_N[:-1] + 1) ** 2]))
)
_SERIES_PSI = 2 * digamma(_SERIES_N + 1) - digamma(_SERIES_N + 1 / 3) - digamma(_SERIES_N + 2 / 3)


def walk_density(d: int, r: np.ndarray) -> np.ndarray:
    """Probability density of ``|Z|`` for ``d = 2`` or ``3`` unit steps."""
    r = np.asarray(r, dtype=float)
    if d == 2:
        return 2.0 / (np.pi * np.sqrt(4.0 - r * r))
    if d != 3:
        raise InputError("radial density is tabulated for d = 2 and 3 only")
    r2 = r * r
    z = r2 * (9.0 - r2) ** 2 / (3.0 + r2) ** 3
    # 1 - z, computed without cancellation near r = 1
    w = 27.0 * (1.0 - r2) ** 2 / (3.0 + r2) ** 3
    f = np.empty_like(r)
    near = w < 0.5
    f[~near] = hyp2f1(1 / 3, 2 / 3, 1.0, z[~near])
    if near.any():
        wn = w[near]
        with np.errstate(divide="ignore"):
            logw = np.log(wn)
        powers = wn[:, None] ** _SERIES_N[None, :]
        f[near] = math.sqrt(3) / (2 * np.pi) * np.sum(
            _SERIES_COEF * powers * (_SERIES_PSI - logw[:, None]), axis=1
        )
    return 2 * math.sqrt(3) / np.pi * r / (3.0 + r2) * f


@functools.lru_cache(maxsize=None)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


@functools.lru_cache(maxsize=None)
def _unit_rule(order: int, left: int, right: int):
    """Panels on [0, 1] halving ``left``/``right`` times toward each end."""
    # deeper grading would put panels below double resolution near 1
    left, right = min(left, _MAX_DEPTH), min(right, _MAX_DEPTH)
    cuts = [0.0]
    cuts += [0.5 * 2.0**-j for j in range(left, 0, -1)]
    cuts.append(0.5)
    cuts += [1.0 - 0.5 * 2.0**-j for j in range(1, right + 1)]
    cuts.append(1.0)
    cuts = np.array(cuts)
    lo, hi = cuts[:-1], cuts[1:]
    gx, gw = _gauss(order)
    x = (0.5 * (hi - lo))[:, None] * gx + (0.5 * (hi + lo))[:, None]
    w = (0.5 * (hi - lo))[:, None] * gw
    return x.ravel(), w.ravel()


def _interval_rule(breaks, order: int, depth: int):
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            # keep the smallest panel well above the spacing of doubles near a, b
            room = int(math.floor(math.log2((b - a) / (1e-13 * max(1.0, abs(a), abs(b))))))
            ux, uw = _unit_rule(order, min(depth, room), min(depth, room))
            xs.append(a + (b - a) * ux)
            ws.append((b - a) * uw)
    return np.concatenate(xs), np.concatenate(ws)


def _radial_rule(d: int, lam: float, order: int, depth: int):
    if d == 1:
        return np.ones(1), np.ones(1)
    a = abs(lam)
    if d == 2:
        breaks = sorted({0.0, np.pi / 2} | ({math.asin(a / 2)} if 0 < a < 2 else set()))
        phi, w = _interval_rule(breaks, order, depth)
        return 2.0 * np.sin(phi), w * (2.0 / np.pi)
    breaks = sorted({0.0, 1.0, 3.0} | ({a} if 0 < a < 3 else set()))
    r, w = _interval_rule(breaks, order, depth)
    return r, w * walk_density(3, r)


def walk_average(
    integrand: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    d: int,
    lam: float,
    gamma: float,
    order: int = 16,
    depth: int = 40,
) -> np.ndarray:
    """Zone average of ``integrand(t, C, S)``.

    ``C = sum cos k``, ``S = sum sin k`` and ``t = C - lam``, the latter
    evaluated without cancellation near the gap.  ``integrand`` must be even
    in ``S`` and may return a leading component
    axis.  ``lam`` and ``gamma`` only steer where the panels are placed: the
    gap closes at ``r cos th = lam`` with ``th`` in ``{0, pi}``, and for small
    ``|gamma|`` the integrand varies quickly near ``cos th = lam / r``.
    """
    if d not in (1, 2, 3):
        raise InputError(f"dimension must be 1, 2 or 3, got {d!r}")
    r, rw = _radial_rule(d, lam, order, depth)
    with np.errstate(invalid="ignore", divide="ignore"):
        split = np.where(np.abs(lam) < r, np.arccos(np.clip(lam / r, -1.0, 1.0)), np.pi / 2)
    # inner panels: full grading at the ends where the gap can close, mild
    # grading at the split whose sharpness scales like |gamma|
    mid = 0 if gamma == 0 else int(min(depth, max(2, math.ceil(-math.log2(abs(gamma))) + 4)))
    end_lo = depth if lam >= 0 else 2
    end_hi = depth if lam <= 0 else 2
    x1, w1 = _unit_rule(order, end_lo, mid)
    x2, w2 = _unit_rule(order, mid, end_hi)
    total = None
    block = max(1, _ROW_BLOCK // (x1.size + x2.size))
    for start in range(0, r.size, block):
        sl = slice(start, start + block)
        rr, th0 = r[sl, None], split[sl, None]
        theta = np.concatenate([th0 * x1, th0 + (np.pi - th0) * x2], axis=1)
        weight = np.concatenate([th0 * w1, (np.pi - th0) * w2], axis=1) / np.pi
        # t = r cos th - lam written so that it keeps full relative accuracy
        # where the gap closes (th near 0 for lam > 0, near pi for lam < 0)
        t = np.where(
            theta <= np.pi / 2,
            (rr - lam) - 2.0 * rr * np.sin(0.5 * theta) ** 2,
            (-rr - lam) + 2.0 * rr * np.cos(0.5 * theta) ** 2,
        )
        values = np.asarray(integrand(t, rr * np.cos(theta), rr * np.sin(theta)), dtype=float)
        lead = values.shape[:-2]
        values = np.broadcast_to(values, lead + theta.shape)
        if not np.all(np.isfinite(values)):
            raise IntegrandError(f"non-finite integrand near lam={lam}, gamma={gamma}", (lam, gamma))
        part = np.sum(values * weight, axis=-1) @ rw[sl]
        total = part if total is None else total + part
    return total
