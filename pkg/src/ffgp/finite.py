"""Finite lattices: Bogoliubov diagonalisation, correlators, site phases, bounds.

For ``H = sum c_i^dag A_ij c_j + 1/2 sum (c_i^dag B_ij c_j^dag + h.c.)`` with
real ``A = A^T`` and ``B = -B^T`` the singular value decomposition
``A + B = U diag(s) V^T`` gives the quasiparticle energies ``s_k`` and the
vectors ``phi_k = sqrt(L) V[:, k]``, ``psi_k = sqrt(L) U[:, k]``.  With
``g = (phi + psi) / 2`` and ``h = (phi - psi) / 2`` the quasiparticles are
``eta_k = L^{-1/2} sum_i (g_ki c_i + h_ki c_i^dag)`` and the ground state is
their common vacuum with energy ``(tr A - sum s_k) / 2``.

Two-site correlators use the pseudo-spin built on the pair ``(i, j)`` by
attaching the string ``2 n_i - 1`` to site ``j``, expressed in the local
frame where ``sigma^z_i = 1 - 2 n_i``.  In that frame the infinite-lattice
limits of these expressions coincide with :func:`ffgp.correlators.correlations_tl`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .concurrence import concurrence_closed
from .correlators import CorrelationSet
from .errors import InputError
from .model import CouplingMatrices, neighbor

__all__ = [
    "BogoliubovSpectrum",
    "BoundCheck",
    "OracleResult",
    "SiteGeometricPhase",
    "check_bounds",
    "correlations_finite",
    "diagonalize",
    "fock_hamiltonian",
    "many_body_oracle",
    "site_gp",
]

BOUND_TOLERANCE = 1e-9
ORACLE_MAX_SITES = 14
_DENSE_SECTOR_LIMIT = 2048


@dataclass(frozen=True)
class BogoliubovSpectrum:
    """Quasiparticle energies and the row vectors ``phi_k``, ``psi_k``.

    ``degenerate`` is set when some energy is zero; the ground state is then
    not unique and the vacuum described here is one member of the multiplet.
    """

    energies: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    site_shape: tuple[int, ...]
    constant: float
    vacuum_parity: int
    degenerate: bool = False

    @property
    def total_sites(self) -> int:
        return self.energies.size

    @property
    def g(self) -> np.ndarray:
        return 0.5 * (self.phi + self.psi)

    @property
    def h(self) -> np.ndarray:
        return 0.5 * (self.phi - self.psi)

    @property
    def ground_energy(self) -> float:
        return self.constant - 0.5 * float(np.sum(self.energies))

    def occupations(self) -> np.ndarray:
        """``<n_i>`` in the vacuum."""
        return np.sum(self.h**2, axis=0) / self.total_sites


def diagonalize(m: CouplingMatrices, zero_tol: float = 1e-10) -> BogoliubovSpectrum:
    """Bogoliubov transformation of the quadratic Hamiltonian with couplings ``m``.

    Energies are returned in ascending order.  Each ``phi_k`` is signed so its
    first non-negligible component is positive; ``psi_k`` follows, so that
    ``(A + B) phi_k = energy_k psi_k``.
    """
    total = m.total_sites
    u, s, vt = np.linalg.svd(m.a + m.b)
    # parity of the quasiparticle vacuum: sign of det(A + B) with the zero-mode
    # partner fixed by the chosen singular vectors
    parity = int(round(np.linalg.det(u) * np.linalg.det(vt)))
    order = np.argsort(s, kind="stable")
    s, phi, psi = s[order], vt[order] * math.sqrt(total), u[:, order].T * math.sqrt(total)
    for k in range(total):
        row = phi[k]
        lead = np.flatnonzero(np.abs(row) > 1e-12 * np.max(np.abs(row)))[0]
        if row[lead] < 0:
            phi[k] = -phi[k]
            psi[k] = -psi[k]
    degenerate = bool(s[0] <= zero_tol * max(1.0, s[-1]))
    return BogoliubovSpectrum(
        energies=s, phi=phi, psi=psi, site_shape=m.site_shape,
        constant=0.5 * float(np.trace(m.a)), vacuum_parity=parity, degenerate=degenerate,
    )


def _bond(s: BogoliubovSpectrum, i: int, j: int) -> CorrelationSet:
    total = s.total_sites
    g, h = s.g, s.h
    hi, hj, gi, gj = h[:, i], h[:, j], g[:, i], g[:, j]
    p30 = 1.0 - 2.0 / total * np.dot(hi, hi)
    p03 = 1.0 - 2.0 / total * np.dot(hj, hj)
    p11 = np.dot(hi - gi, hj + gj) / total
    p22 = np.dot(hi + gi, hj - gj) / total
    p33 = p30 * p03 + 4.0 / total**2 * (np.dot(hi, hj) * np.dot(gi, gj) - np.dot(hi, gj) * np.dot(gi, hj))
    return CorrelationSet(
        p03=float(p03), p30=float(p30), p11=float(p11), p22=float(p22), p33=float(p33),
        degenerate=s.degenerate,
    )


def correlations_finite(s: BogoliubovSpectrum, i: int, direction: int | None = 0) -> CorrelationSet:
    """Correlators of site ``i`` and its neighbour along ``direction``.

    With ``direction=None`` the correlators are averaged over all lattice
    directions, which is how bond quantities of the ``d``-dimensional lattice
    are reported.
    """
    dims = len(s.site_shape)
    directions = range(dims) if direction is None else [direction]
    bonds = [_bond(s, i, neighbor(s.site_shape, i, a)) for a in directions]
    if len(bonds) == 1:
        return bonds[0]
    mean = {name: float(np.mean([getattr(b, name) for b in bonds])) for name in ("p03", "p30", "p11", "p22", "p33")}
    return CorrelationSet(**mean, degenerate=s.degenerate)


@dataclass(frozen=True)
class SiteGeometricPhase:
    """``per_site[i] = pi * sum_k h_ki**2`` (between 0 and ``pi * L``).

    ``total`` is the phase of the whole state, ``pi`` times the mean filling,
    equal to ``sum(per_site) / L**2``.
    """

    per_site: np.ndarray
    total: float


def site_gp(s: BogoliubovSpectrum) -> SiteGeometricPhase:
    per_site = math.pi * np.sum(s.h**2, axis=0)
    return SiteGeometricPhase(per_site, float(np.sum(per_site)) / s.total_sites**2)


@dataclass(frozen=True)
class BoundCheck:
    c1_bound: float
    c2_bound: float
    c1_raw: float
    c2_raw: float
    satisfied: tuple[bool, bool]


def check_bounds(s: BogoliubovSpectrum, i: int, direction: int = 0) -> BoundCheck:
    """Compare the concurrence branches on a bond with their filling bounds.

    With ``nu_i = gamma_gi / (pi L)`` the site filling::

        c_one <= nu_i + nu_j - sqrt((1 + p33)**2 - (p30 + p03)**2)
        c_two <= 1 + (nu_i - nu_j) - (nu_i - nu_j)**2 / 2
    """
    j = neighbor(s.site_shape, i, direction)
    p = correlations_finite(s, i, direction)
    result = concurrence_closed(p)
    phases = site_gp(s).per_site
    scale = math.pi * s.total_sites
    nu_i, nu_j = phases[i] / scale, phases[j] / scale
    radicand = max((1 + p.p33) ** 2 - (p.p30 + p.p03) ** 2, 0.0)
    c1_bound = nu_i + nu_j - math.sqrt(radicand)
    c2_bound = 1.0 + (nu_i - nu_j) - 0.5 * (nu_i - nu_j) ** 2
    return BoundCheck(
        c1_bound=c1_bound, c2_bound=c2_bound, c1_raw=result.c_one, c2_raw=result.c_two,
        satisfied=(result.c_one <= c1_bound + BOUND_TOLERANCE, result.c_two <= c2_bound + BOUND_TOLERANCE),
    )


# ----------------------------------------------------------------------------
# Fock-space reference


def _annihilators(total: int) -> list[sp.csr_matrix]:
    states = np.arange(1 << total)
    ops = []
    for i in range(total):
        occupied = states[(states >> i) & 1 == 1]
        below = occupied & ((1 << i) - 1)
        sign = 1.0 - 2.0 * (np.array([bin(x).count("1") for x in below]) % 2)
        ops.append(sp.csr_matrix((sign, (occupied ^ (1 << i), occupied)), shape=(1 << total, 1 << total)))
    return ops


def fock_hamiltonian(m: CouplingMatrices, max_sites: int = ORACLE_MAX_SITES):
    """Sparse many-body Hamiltonian and the annihilation operators.

    Basis state ``s`` has mode ``i`` occupied when bit ``i`` of ``s`` is set;
    fermion signs follow the bit order.
    """
    total = m.total_sites
    if total > max_sites:
        raise InputError(f"Fock-space reference limited to {max_sites} sites, got {total}")
    c = _annihilators(total)
    cd = [op.T.tocsr() for op in c]
    dim = 1 << total
    ham = sp.csr_matrix((dim, dim))
    for i in range(total):
        for j in range(total):
            if m.a[i, j] != 0.0:
                ham = ham + m.a[i, j] * (cd[i] @ c[j])
            if m.b[i, j] != 0.0:
                ham = ham + 0.5 * m.b[i, j] * (cd[i] @ cd[j] + c[j] @ c[i])
    return ham.tocsr(), c


@dataclass(frozen=True)
class OracleResult:
    """Reference ground state from exact diagonalisation in Fock space.

    ``bonds[(i, direction)]`` holds the correlators in the same local frame
    as :func:`correlations_finite`; ``tables`` holds the full 4x4 table of
    ``<sigma^a_i sigma^b_j>`` (real parts) in that frame so the entries
    forced to zero by parity can be checked.  ``sector_energies`` maps parity
    ``+1``/``-1`` to the lowest energy in that sector.
    """

    ground_energy: float
    parity: float
    degenerate: bool
    sector_energies: dict = field(default_factory=dict)
    bonds: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)


def _lowest(block: sp.csr_matrix, count: int):
    if block.shape[0] <= _DENSE_SECTOR_LIMIT:
        values, vectors = np.linalg.eigh(block.toarray())
        return values[:count], vectors[:, :count]
    values, vectors = eigsh(block, k=count, which="SA", tol=1e-13)
    order = np.argsort(values)
    return values[order], vectors[:, order]


# sign changes taking <sigma^a_i sigma^b_j> built from 2n - 1 to the frame with
# sigma^z = 1 - 2n: a pi rotation about x on site i and about y on site j
_FRAME_I = np.array([1.0, 1.0, -1.0, -1.0])
_FRAME_J = np.array([1.0, -1.0, 1.0, -1.0])


def many_body_oracle(
    m: CouplingMatrices, parity: int | None = None, max_sites: int = ORACLE_MAX_SITES, tol: float = 1e-9
) -> OracleResult:
    """Exact ground state of the quadratic Hamiltonian by brute force.

    The Hamiltonian conserves ``prod_i (1 - 2 n_i)``, so each parity sector is
    diagonalised separately.  ``parity`` selects a sector; by default the
    lower one is used.  ``degenerate`` is set when the chosen ground state is
    degenerate within its sector or with the other sector.
    """
    ham, c = fock_hamiltonian(m, max_sites)
    total = m.total_sites
    dim = 1 << total
    popcount = np.array([bin(x).count("1") for x in range(dim)])
    sectors = {1: np.flatnonzero(popcount % 2 == 0), -1: np.flatnonzero(popcount % 2 == 1)}
    lowest = {}
    for sign, idx in sectors.items():
        block = ham[idx][:, idx]
        lowest[sign] = _lowest(block, min(2, idx.size))
    energies = {sign: float(vals[0]) for sign, (vals, _) in lowest.items()}
    if parity is None:
        parity = 1 if energies[1] <= energies[-1] else -1
    if parity not in (1, -1):
        raise InputError("parity must be +1 or -1")
    values, vectors = lowest[parity]
    scale = max(1.0, float(np.max(np.abs(m.a))), float(np.max(np.abs(m.b))))
    degenerate = abs(energies[1] - energies[-1]) <= tol * scale or (
        values.size > 1 and values[1] - values[0] <= tol * scale
    )
    state = np.zeros(dim)
    state[sectors[parity]] = vectors[:, 0]
    number = [op.T.tocsr() @ op for op in c]
    parity_value = float(state @ (state * (1.0 - 2.0 * (popcount % 2))))
    bonds, tables = {}, {}
    identity = sp.identity(dim, format="csr")
    for i in range(total):
        z_i = 2.0 * number[i] - identity
        for direction in range(len(m.site_shape)):
            j = neighbor(m.site_shape, i, direction)
            if j == i:
                continue
            ops_i = _pauli_set(c[i].T.tocsr(), c[i], z_i, identity)
            z_j = 2.0 * number[j] - identity
            ops_j = _pauli_set(z_i @ c[j].T.tocsr(), z_i @ c[j], z_j, identity)
            table = np.empty((4, 4))
            for a in range(4):
                left = ops_i[a] @ state
                for b in range(4):
                    table[a, b] = np.vdot(left, ops_j[b] @ state).real if a or b else 1.0
            table = table * np.outer(_FRAME_I, _FRAME_J)
            tables[(i, direction)] = table
            bonds[(i, direction)] = CorrelationSet(
                p03=table[0, 3], p30=table[3, 0], p11=table[1, 1], p22=table[2, 2], p33=table[3, 3],
                p12=table[1, 2], p21=table[2, 1], degenerate=degenerate,
            )
    return OracleResult(
        ground_energy=energies[parity], parity=parity_value, degenerate=bool(degenerate),
        sector_energies=energies, bonds=bonds, tables=tables,
    )


def _pauli_set(raise_op, lower_op, z_op, identity):
    x = raise_op + lower_op
    y = -1j * (raise_op - lower_op)
    return [identity, x, y, z_op]
