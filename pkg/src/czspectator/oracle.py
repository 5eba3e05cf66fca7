"""Exact references for the perturbative formulas.

Two numerically exact calculations live here: the coupled pair of truncated
anharmonic oscillators, diagonalised densely to read off dressed-state shifts,
and the single transmon in the charge basis, used to predict the sextic
correction ``beta`` from a measured frequency and anharmonicity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import root

from czspectator.device import NumericalError, TransmonSpec
from czspectator.dispersive import ShiftTriple

HERMITIAN_RTOL = 1e-12
MIN_OVERLAP = 0.5
# labels (gate level, spectator level) that enter zeta1 and zeta2
_SHIFT_LABELS = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def oscillator_levels(freq: float, anh: float, beta: float, dims: int) -> np.ndarray:
    """Bare energies ``f n + anh/2 n(n-1) + beta/6 n(n-1)(n-2)`` for n < dims."""
    n = np.arange(dims, dtype=float)
    return freq * n + 0.5 * anh * n * (n - 1) + beta / 6.0 * n * (n - 1) * (n - 2)


def lowering(dims: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dims, dtype=float)), 1)


@dataclass(frozen=True)
class PairHamiltonian:
    """Gate-spectator Hamiltonian in MHz; basis index is ``i_gate * dims + i_spec``."""

    dims: int
    matrix: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.dims ** 2, self.dims ** 2):
            raise ValueError(f"matrix shape {m.shape} does not match dims={self.dims}")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.conj().T).max() > HERMITIAN_RTOL * scale:
            raise ValueError("Hamiltonian is not Hermitian")

    def index(self, i_gate: int, i_spec: int) -> int:
        return i_gate * self.dims + i_spec


def build_pair_hamiltonian(g: TransmonSpec, s: TransmonSpec, j: float, dims: int = 4) -> PairHamiltonian:
    if dims < 3:
        raise ValueError(f"dims must be at least 3 to contain |2>, got {dims}")
    a = lowering(dims)
    h = np.diag(
        np.add.outer(
            oscillator_levels(g.freq, g.anh, g.beta, dims),
            oscillator_levels(s.freq, s.anh, s.beta, dims),
        ).ravel()
    )
    # J (a_g a_s^dag + a_g^dag a_s)
    h = h + j * (np.kron(a, a.T) + np.kron(a.T, a))
    return PairHamiltonian(dims, h)


@dataclass
class DressedSpectrum:
    """Dressed energies labelled by their dominant bare product state."""

    energies: dict[tuple[int, int], float]
    overlaps: dict[tuple[int, int], float]

    def hybridized(self, labels=None) -> bool:
        labels = self.overlaps.keys() if labels is None else labels
        return any(self.overlaps[lab] <= MIN_OVERLAP for lab in labels)


def dressed_spectrum(h: PairHamiltonian) -> DressedSpectrum:
    """Label eigenstates by maximum overlap with bare states.

    ``eigh`` returns eigenvalues in ascending order, so ``argmax`` breaks ties
    toward the lower energy. A bare state whose best overlap is at most 0.5 is
    reported with that overlap and should be treated as hybridised.
    """
    w, v = np.linalg.eigh(h.matrix)
    weight = np.abs(v) ** 2
    best = np.argmax(weight, axis=1)
    d = h.dims
    energies, overlaps = {}, {}
    for i in range(d):
        for k in range(d):
            b = i * d + k
            energies[(i, k)] = float(w[best[b]])
            overlaps[(i, k)] = float(weight[b, best[b]])
    return DressedSpectrum(energies, overlaps)


def exact_shifts(h: PairHamiltonian) -> ShiftTriple:
    """Dispersive shifts from dressed energies (gate index first).

    Returns a flagged result when any of the six levels involved is
    hybridised, since the shifts are then not defined.
    """
    spec = dressed_spectrum(h)
    if spec.hybridized(_SHIFT_LABELS):
        return ShiftTriple.divergent()
    e = spec.energies
    z1 = e[(1, 1)] - e[(1, 0)] - e[(0, 1)] + e[(0, 0)]
    z2 = e[(2, 1)] - e[(2, 0)] - e[(0, 1)] + e[(0, 0)]
    return ShiftTriple(z1, z2)


def exact_shifts_at(gate: TransmonSpec, spec: TransmonSpec, j: float, dims: int = 4) -> ShiftTriple:
    return exact_shifts(build_pair_hamiltonian(gate, spec, j, dims))


def min_shift_overlap(gate: TransmonSpec, spec: TransmonSpec, j: float, dims: int = 4) -> float:
    """Smallest dressed/bare overlap among the levels entering the shifts."""
    ds = dressed_spectrum(build_pair_hamiltonian(gate, spec, j, dims))
    return min(ds.overlaps[lab] for lab in _SHIFT_LABELS)


# --- single transmon, charge basis ---------------------------------------

CHARGE_CUTOFF = 20
CHARGE_CUTOFF_MAX = 30
CUTOFF_TOL = 1e-3  # MHz
MIN_EJ_EC = 20.0


def charge_levels(ej: float, ec: float, ncut: int = CHARGE_CUTOFF, n_g: float = 0.0, levels: int = 4) -> np.ndarray:
    """Lowest transmon energies relative to the ground state (MHz).

    ``4 EC (n - n_g)^2 - EJ cos(phi)`` with charges ``-ncut..ncut``; the
    cosine only links neighbouring charge states so the matrix is tridiagonal.
    """
    n = np.arange(-ncut, ncut + 1, dtype=float)
    diag = 4.0 * ec * (n - n_g) ** 2
    off = np.full(2 * ncut, -0.5 * ej)
    e = eigh_tridiagonal(diag, off, select="i", select_range=(0, levels - 1), eigvals_only=True)
    return e - e[0]


@dataclass(frozen=True)
class TransmonFit:
    ej: float
    ec: float
    ncut: int
    freq: float
    anh: float
    beta: float

    @property
    def ratio(self) -> float:
        return self.ej / self.ec


def _moments(ej, ec, ncut):
    e = charge_levels(ej, ec, ncut)
    e01, e12, e23 = e[1], e[2] - e[1], e[3] - e[2]
    return e01, e12 - e01, (e23 - e12) - (e12 - e01)


def fit_transmon(freq: float, anh: float, ncut: int = CHARGE_CUTOFF) -> TransmonFit:
    """Find (EJ, EC) reproducing ``freq`` and ``anh`` and report ``beta``.

    ``beta`` is the change of anharmonicity one level up,
    ``(E23 - E12) - (E12 - E01)`` with ``E_ij`` transition energies.
    """
    if not (freq > 0 and anh < 0):
        raise ValueError("need a positive frequency and a negative anharmonicity")
    ec0 = -anh
    ej0 = (freq - anh) ** 2 / (8.0 * ec0)

    def residual(x):
        ej, ec = x
        if ej <= 0 or ec <= 0:
            return [1e6, 1e6]
        f, a, _ = _moments(ej, ec, ncut)
        return [f - freq, a - anh]

    sol = root(residual, [ej0, ec0], method="hybr", options={"xtol": 1e-13})
    ej, ec = sol.x
    res = np.abs(residual(sol.x))
    if not sol.success or res.max() > 1e-6:
        raise NumericalError(f"transmon fit did not converge: {sol.message}")
    if ej / ec < MIN_EJ_EC:
        raise NumericalError(f"EJ/EC = {ej / ec:.1f} is outside the transmon regime")

    if ncut < CHARGE_CUTOFF_MAX:
        coarse = charge_levels(ej, ec, ncut)
        fine = charge_levels(ej, ec, ncut + 10)
        if np.abs(coarse - fine).max() > CUTOFF_TOL:
            return fit_transmon(freq, anh, ncut=CHARGE_CUTOFF_MAX)

    f, a, beta = _moments(ej, ec, ncut)
    return TransmonFit(float(ej), float(ec), ncut, float(f), float(a), float(beta))


def transmon_beta(freq: float, anh: float) -> float:
    """Sextic correction (MHz) of a transmon with the given ``freq`` and ``anh``."""
    return fit_transmon(freq, anh).beta
