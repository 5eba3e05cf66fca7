import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from czspectator.tomography import (
    CZ_IDEAL,
    PAULI_LABELS,
    PAULIS,
    chi_from_unitary,
    cz_error_unitary,
    pauli_coefficients,
    phase_error,
    process_error,
    process_fidelity,
    quadratic_phase_error,
    repeated_gate_error_scaling,
)

phase = st.floats(-10.0, 10.0, allow_nan=False)


def test_ideal():
    assert np.allclose(CZ_IDEAL.diagonal(), [1, 1, 1, -1], atol=1e-15)
    assert process_error(CZ_IDEAL) == pytest.approx(0.0, abs=1e-15)
    assert phase_error(0, 0, 0) == pytest.approx(0.0, abs=1e-15)


def test_conditional_wrap():
    assert np.allclose(cz_error_unitary(0.0, 0.0, 180.0), np.eye(4))


def test_chi_examples():
    chi = chi_from_unitary(np.eye(4))
    assert chi[0, 0] == pytest.approx(1.0) and np.abs(chi).sum() == pytest.approx(1.0)
    c = pauli_coefficients(CZ_IDEAL)
    support = {PAULI_LABELS[i] for i in np.flatnonzero(np.abs(c) > 1e-12)}
    assert support == {"II", "IZ", "ZI", "ZZ"}
    assert c[PAULI_LABELS.index("ZZ")] == pytest.approx(-0.5)
    assert np.linalg.matrix_rank(chi_from_unitary(CZ_IDEAL), tol=1e-10) == 1


def test_basis_order():
    u = cz_error_unitary(30.0, 0.0, 0.0)
    # g1 is the left qubit: its phase sits on |10> and |11>
    assert np.angle(u[2, 2]) == pytest.approx(np.radians(30.0))
    assert np.angle(u[1, 1]) == pytest.approx(0.0)


def test_paulis_orthonormal():
    gram = np.einsum("aij,bij->ab", PAULIS.conj(), PAULIS) / 4
    assert np.allclose(gram, np.eye(16))


def test_coefficients_reconstruct():
    u = cz_error_unitary(3.0, -7.0, 2.0)
    c = pauli_coefficients(u)
    assert np.allclose(np.einsum("m,mij->ij", c, PAULIS), u)


def test_known_value():
    # all three errors at the largest configuration of the bundled device
    assert phase_error(10.5, 0.0, -2.94) == pytest.approx(0.00652, abs=5e-5)


def test_rejects_non_unitary():
    with pytest.raises(ValueError):
        chi_from_unitary(2 * np.eye(4))
    with pytest.raises(ValueError):
        chi_from_unitary(np.eye(3))


def test_repeated_gates():
    total, ratio = repeated_gate_error_scaling(3, 1.0, 2.0, -1.0)
    assert ratio == pytest.approx(9.0, rel=0.02)
    assert total == pytest.approx(phase_error(3.0, 6.0, -3.0))
    assert repeated_gate_error_scaling(3, 2.0, 0.0, -1.0)[1] == pytest.approx(9.0, rel=0.02)
    assert repeated_gate_error_scaling(1, 2.0, 0.0, -1.0)[1] == pytest.approx(1.0)
    assert repeated_gate_error_scaling(3, 30.0, 0.0, 0.0)[1] < 9.0
    total2, _ = repeated_gate_error_scaling(2, 1.0, 2.0, -1.0)
    assert total2 == pytest.approx(phase_error(2.0, 4.0, -2.0))
    with pytest.raises(ValueError):
        repeated_gate_error_scaling(0, 1, 1, 1)


def in_ball(radius):
    """Phase-error vectors (d1, d2, dc) of Euclidean norm at most ``radius`` degrees."""
    comp = st.floats(-1.0, 1.0, allow_nan=False)

    def scale(v):
        n = float(np.linalg.norm(v))
        return tuple(radius * x / n for x in v) if n > 1 else tuple(radius * x for x in v)

    return st.tuples(comp, comp, comp).map(scale)


@settings(max_examples=200)
@given(in_ball(10.0))
def test_quadratic_expansion(p):
    assert abs(quadratic_phase_error(*p) - phase_error(*p)) < 1e-4


@settings(max_examples=100)
@given(in_ball(20.0))
def test_quadratic_expansion_wider(p):
    assert abs(quadratic_phase_error(*p) - phase_error(*p)) < 1e-3


def test_quadratic_expansion_remainder_is_quartic():
    for v in ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (1.0, 1.0, 1.0)):
        v = np.array(v)
        r1 = abs(quadratic_phase_error(*v) - phase_error(*v))
        r2 = abs(quadratic_phase_error(*2 * v) - phase_error(*2 * v))
        assert r2 / r1 == pytest.approx(16.0, rel=0.01)


@given(phase, phase, phase, st.floats(-np.pi, np.pi))
def test_global_phase_invariance(d1, d2, dc, g):
    u = cz_error_unitary(d1, d2, dc)
    assert process_error(np.exp(1j * g) * u) == pytest.approx(process_error(u), abs=1e-12)


@given(phase, phase, phase)
def test_exchange_symmetry(d1, d2, dc):
    assert phase_error(d1, d2, dc) == pytest.approx(phase_error(d2, d1, dc), abs=1e-14)


@given(phase, phase, phase)
def test_chi_properties(d1, d2, dc):
    chi = chi_from_unitary(cz_error_unitary(d1, d2, dc))
    assert np.allclose(chi, chi.conj().T)
    assert np.trace(chi).real == pytest.approx(1.0)
    w = np.linalg.eigvalsh(chi)
    assert w[-1] == pytest.approx(1.0) and np.abs(w[:-1]).max() < 1e-12


def test_fidelity_bounds():
    rng = np.random.default_rng(1)
    for _ in range(5):
        d = rng.uniform(-180, 180, 3)
        f = process_fidelity(cz_error_unitary(*d))
        assert -1e-12 <= f <= 1 + 1e-12
