"""Process matrices and phase-error infidelity of a controlled-phase gate.

Basis ordering is ``|q_g1 q_g2>`` with g1 the left (most significant) qubit:
``|00>, |01>, |10>, |11>``. The dynamical phase of g1 therefore multiplies
``|10>`` and that of g2 multiplies ``|01>``. Phases are taken in degrees.
"""

import itertools

import numpy as np

UNITARY_TOL = 1e-12

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
PAULI_LABELS = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
PAULIS = np.array([np.kron(_PAULI_1Q[a], _PAULI_1Q[b]) for a, b in PAULI_LABELS])


def _check_unitary(u):
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {u.shape}")
    if np.abs(u.conj().T @ u - np.eye(4)).max() > UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    return u


def cz_error_unitary(d1: float, d2: float, dc: float) -> np.ndarray:
    """CZ with dynamical phase errors ``d1`` (g1), ``d2`` (g2) and conditional error ``dc``."""
    p1, p2, pc = np.radians([d1, d2, dc])
    return np.diag(
        [1.0, np.exp(1j * p2), np.exp(1j * p1), np.exp(1j * (np.pi + pc + p1 + p2))]
    ).astype(complex)


def pauli_coefficients(u) -> np.ndarray:
    """``c_m`` with ``u = sum_m c_m P_m`` over the 16 two-qubit Paulis."""
    u = np.asarray(u, dtype=complex)
    return np.einsum("mij,ji->m", PAULIS.conj(), u) / 4.0


def chi_from_unitary(u) -> np.ndarray:
    """Process matrix ``chi_mn = c_m c_n^*`` (Pauli basis, trace one) of a unitary."""
    c = pauli_coefficients(_check_unitary(u))
    return np.outer(c, c.conj())


CZ_IDEAL = cz_error_unitary(0.0, 0.0, 0.0)
_CHI_IDEAL = chi_from_unitary(CZ_IDEAL)


def process_fidelity(u, ideal=CZ_IDEAL) -> float:
    chi = chi_from_unitary(u)
    chi_ideal = _CHI_IDEAL if ideal is CZ_IDEAL else chi_from_unitary(ideal)
    return float(np.real(np.trace(chi @ chi_ideal)))


def process_error(u) -> float:
    """``1 - Tr[chi(u) chi(CZ)]``."""
    return 1.0 - process_fidelity(u)


def phase_error(d1: float, d2: float, dc: float) -> float:
    """Infidelity of the CZ with the given phase errors (degrees)."""
    return process_error(cz_error_unitary(d1, d2, dc))


def quadratic_phase_error(d1: float, d2: float, dc: float) -> float:
    """Second-order expansion of :func:`phase_error`; phases in degrees."""
    p1, p2, pc = np.radians([d1, d2, dc])
    return float(0.25 * p1**2 + 0.25 * p2**2 + 0.1875 * pc**2 + 0.25 * p1 * pc + 0.25 * p2 * pc)


def repeated_gate_error_scaling(n: int, d1: float, d2: float, dc: float) -> tuple[float, float]:
    """Error of ``n`` gates in series and its ratio to the single-gate error.

    The errors are diagonal phases, so ``n`` gates add their phase errors.
    The ratio approaches ``n**2`` while the errors stay quadratic.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    single = phase_error(d1, d2, dc)
    # n identical CZs equal CZ^n; compare against the ideal CZ^n
    u = np.linalg.matrix_power(cz_error_unitary(d1, d2, dc), n)
    ideal = np.linalg.matrix_power(CZ_IDEAL, n)
    total = 1.0 - process_fidelity(u, ideal)
    ratio = total / single if single > 0 else float("nan")
    return total, ratio
