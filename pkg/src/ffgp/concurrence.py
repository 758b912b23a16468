"""Wootters concurrence of a two-site state given by its correlators.

:func:`concurrence_closed` uses the closed form valid for parity-symmetric
states, whose density matrix only has the diagonal and the two anti-diagonal
pairs ``(01, 10)`` and ``(00, 11)`` populated.  :func:`wootters_oracle` builds
the 4x4 density matrix and applies the general definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlators import CorrelationSet
from .errors import UnphysicalInputError

__all__ = [
    "RADICAND_TOLERANCE",
    "ConcurrenceResult",
    "concurrence_closed",
    "two_site_density",
    "wootters_oracle",
]

RADICAND_TOLERANCE = 1e-9
_PSD_TOLERANCE = 1e-10
_ROUNDING = 64 * np.finfo(float).eps

_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_FLIP = np.kron(_PAULI[2], _PAULI[2])


@dataclass(frozen=True)
class ConcurrenceResult:
    """Raw branches ``c_one``, ``c_two`` (may be negative) and ``c = max(0, c_one, c_two)``.

    ``wootters_roots`` is filled only by the density-matrix route.  There
    ``c_one`` and ``c_two`` are both set to ``roots[0] - sum(roots[1:])``.
    """

    c_one: float
    c_two: float
    c: float
    wootters_roots: tuple[float, float, float, float] | None = None


def _population(value: float) -> float:
    """Four times a diagonal density-matrix entry; rounding-level values become 0."""
    return 0.0 if abs(value) <= _ROUNDING else value


def _root(first: float, second: float, label: str) -> float:
    """``sqrt(first * second)`` for a product of two populations.

    The factored form avoids the cancellation in ``a**2 - b**2`` when one
    population vanishes, where the square root would amplify rounding.
    """
    value = _population(first) * _population(second)
    if value < -RADICAND_TOLERANCE:
        raise UnphysicalInputError(f"{label} = {value:.3e} is negative; correlators are not physical")
    return math.sqrt(max(value, 0.0))


def concurrence_closed(p: CorrelationSet) -> ConcurrenceResult:
    """Closed-form concurrence branches.

    ``c_one = (|rho_{01,10}| - sqrt(rho_00 rho_11)) * 2`` and
    ``c_two = (|rho_{00,11}| - sqrt(rho_01 rho_10)) * 2`` written in terms of
    correlators.  Both coherences keep their off-diagonal ``p12``/``p21``
    parts, so the formula is exact for any state of this block structure.
    """
    hop = math.hypot(p.p11 + p.p22, p.p12 - p.p21)
    pair = math.hypot(p.p11 - p.p22, p.p12 + p.p21)
    same = _root(1 + p.p33 + p.p30 + p.p03, 1 + p.p33 - p.p30 - p.p03, "(1+p33)^2-(p30+p03)^2")
    opposite = _root(1 - p.p33 + p.p30 - p.p03, 1 - p.p33 - p.p30 + p.p03, "(1-p33)^2-(p30-p03)^2")
    c_one = 0.5 * (hop - same)
    c_two = 0.5 * (pair - opposite)
    return ConcurrenceResult(c_one, c_two, max(0.0, c_one, c_two))


def two_site_density(p: CorrelationSet) -> np.ndarray:
    """``rho = (1/4) sum_ab p_ab sigma^a (x) sigma^b`` as a complex 4x4 array."""
    table = p.as_matrix()
    rho = np.zeros((4, 4), dtype=complex)
    for a in range(4):
        for b in range(4):
            if table[a, b] != 0.0:
                rho += table[a, b] * np.kron(_PAULI[a], _PAULI[b])
    return rho / 4


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(matrix)
    # eigenvalues at rounding level are zero; their square roots (~1e-8) would
    # otherwise leak into the Wootters roots
    values = np.where(values <= _ROUNDING, 0.0, values)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def wootters_oracle(p: CorrelationSet) -> ConcurrenceResult:
    """Concurrence from the spin-flipped density matrix.

    The roots are the singular values of ``sqrt(rho) sqrt(rho_tilde)`` with
    ``rho_tilde = (sy x sy) rho^* (sy x sy)``.  Their squares are the
    eigenvalues of ``rho rho_tilde``.
    """
    rho = two_site_density(p)
    if abs(np.trace(rho).real - 1.0) > 1e-12:
        raise UnphysicalInputError("density matrix trace differs from 1")
    spectrum = np.linalg.eigvalsh(rho)
    if spectrum[0] < -_PSD_TOLERANCE:
        raise UnphysicalInputError(f"density matrix has eigenvalue {spectrum[0]:.3e}")
    flipped = _FLIP @ rho.conj() @ _FLIP
    roots = np.linalg.svd(_psd_sqrt(rho) @ _psd_sqrt(flipped), compute_uv=False)
    roots = tuple(float(x) for x in np.sort(roots)[::-1])
    raw = roots[0] - roots[1] - roots[2] - roots[3]
    return ConcurrenceResult(raw, raw, max(0.0, raw), roots)
