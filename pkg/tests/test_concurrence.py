import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffgp.concurrence import concurrence_closed, two_site_density, wootters_oracle
from ffgp.correlators import CorrelationSet, correlations_tl
from ffgp.errors import UnphysicalInputError
from ffgp.model import ModelParams

BELL = CorrelationSet(p03=0.0, p30=0.0, p11=1.0, p22=1.0, p33=-1.0)
PAIR_BELL = CorrelationSet(p03=0.0, p30=0.0, p11=1.0, p22=-1.0, p33=1.0)
PRODUCT = CorrelationSet(p03=1.0, p30=1.0, p11=0.0, p22=0.0, p33=1.0)
MIXED = CorrelationSet(p03=0.0, p30=0.0, p11=0.0, p22=0.0, p33=0.0)


def test_bell_states_are_maximally_entangled():
    assert concurrence_closed(BELL).c == pytest.approx(1.0, abs=1e-15)
    assert concurrence_closed(BELL).c_one == pytest.approx(1.0, abs=1e-15)
    assert concurrence_closed(PAIR_BELL).c_two == pytest.approx(1.0, abs=1e-15)
    assert wootters_oracle(BELL).c == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("state", [PRODUCT, MIXED])
def test_unentangled_states(state):
    assert concurrence_closed(state).c == 0.0
    assert wootters_oracle(state).c == pytest.approx(0.0, abs=1e-7)


def test_density_matrix_is_valid():
    rho = two_site_density(BELL)
    assert np.trace(rho).real == pytest.approx(1.0)
    np.testing.assert_allclose(rho, rho.conj().T)
    np.testing.assert_allclose(np.linalg.eigvalsh(rho), [0, 0, 0, 1], atol=1e-14)


def test_unphysical_input_rejected():
    bad = CorrelationSet(p03=1.0, p30=-1.0, p11=0.0, p22=0.0, p33=0.5)
    with pytest.raises(UnphysicalInputError):
        concurrence_closed(bad)
    with pytest.raises(UnphysicalInputError):
        wootters_oracle(CorrelationSet(p03=0.0, p30=0.0, p11=1.0, p22=1.0, p33=1.0))


def test_tiny_negative_radicand_is_clamped():
    edge = CorrelationSet(p03=0.0, p30=0.0, p11=0.0, p22=0.0, p33=-1.0 - 1e-12)
    assert concurrence_closed(edge).c_one == pytest.approx(0.0, abs=1e-6)


def test_infinite_lattice_example():
    p = correlations_tl(ModelParams(2, 1.0, 1.0), method="walk")
    result = concurrence_closed(p)
    assert result.c_one == pytest.approx(-0.1484910653582835, abs=1e-12)
    assert result.c_two == pytest.approx(-0.06086714448319158, abs=1e-12)
    assert result.c == 0.0


def _x_state(weights, phase_a, phase_b, strength_a, strength_b):
    """Random parity-block density matrix, returned as correlators."""
    w = np.asarray(weights) / np.sum(weights)  # populations of 00, 01, 10, 11
    rho = np.diag(w).astype(complex)
    a = strength_a * math.sqrt(w[1] * w[2]) * np.exp(1j * phase_a)
    b = strength_b * math.sqrt(w[0] * w[3]) * np.exp(1j * phase_b)
    rho[1, 2], rho[2, 1] = a, np.conj(a)
    rho[0, 3], rho[3, 0] = b, np.conj(b)
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    t = {f"p{x}{y}": float(np.trace(rho @ np.kron(paulis[x], paulis[y])).real) for x in range(4) for y in range(4)}
    return CorrelationSet(
        p03=t["p03"], p30=t["p30"], p11=t["p11"], p22=t["p22"], p33=t["p33"], p12=t["p12"], p21=t["p21"]
    )


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4),
    st.floats(0, 2 * math.pi),
    st.floats(0, 2 * math.pi),
    st.floats(0, 1),
    st.floats(0, 1),
)
def test_closed_form_matches_oracle(weights, phase_a, phase_b, sa, sb):
    p = _x_state(weights, phase_a, phase_b, sa, sb)
    assert concurrence_closed(p).c == pytest.approx(wootters_oracle(p).c, abs=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4), st.floats(0, 6.2), st.floats(0, 1))
def test_site_exchange_invariance(weights, phase, strength):
    p = _x_state(weights, phase, 0.3, strength, strength)
    assert concurrence_closed(p.swapped()).c == pytest.approx(concurrence_closed(p).c, abs=1e-12)


def test_vanishing_population_keeps_full_precision():
    # rho_11 is zero up to rounding; a naive difference of squares loses 8 digits
    p = CorrelationSet(p03=-7 / 9, p30=-7 / 9, p11=-2 / 9, p22=-2 / 9, p33=5 / 9)
    assert concurrence_closed(p).c == pytest.approx(2 / 9, abs=1e-14)
    assert wootters_oracle(p).c == pytest.approx(2 / 9, abs=1e-14)
