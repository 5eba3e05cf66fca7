"""Second-order dispersive shifts and the gate errors they cause.

Conventions: frequencies in MHz (omega/2pi), times in ns, phases in degrees.
``detuning = f_spectator - f_gate``. Shifts are energy shifts of the gate
qubit's |1> (``zeta1``) and |2> (``zeta2``) levels when the spectator is in
|1>, i.e. ``zeta1 = E11 - E10 - E01 + E00`` with the gate index first.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from czspectator.device import GateContext, Role, SpectatorConfig, TransmonSpec

#: MHz * ns -> degrees
DEG_PER_MHZ_NS = 360e-3
POLE_EPS = 1.0
# |delta / (2 sqrt2 J)| above which the quartic leakage law is not trusted
LEAKAGE_VALIDITY = 0.5


@dataclass(frozen=True)
class ShiftTriple:
    """Dispersive shifts in MHz; ``zeta12`` is derived so it is always ``zeta2 - zeta1``."""

    zeta1: float
    zeta2: float
    diverged: bool = False

    @property
    def zeta12(self) -> float:
        return self.zeta2 - self.zeta1

    @classmethod
    def divergent(cls) -> "ShiftTriple":
        return cls(math.nan, math.nan, diverged=True)


def poles(anh_g: float, anh_s: float, beta_g: float = 0.0) -> dict[str, list[float]]:
    """Detunings at which the perturbative shifts diverge."""
    return {
        "zeta1": [anh_g, -anh_s],
        "zeta2": [2 * anh_g + beta_g, anh_g, anh_g - anh_s, 0.0],
    }


def zeta_curves(detuning, anh_g, anh_s, j, beta_g=0.0, pole_eps=POLE_EPS):
    """Vectorised ``(zeta1, zeta2, diverged)`` over an array of detunings.

    Entries within ``pole_eps`` of any pole come back as NaN with the flag set.
    """
    d = np.asarray(detuning, dtype=float)
    j2 = j * j
    dens = np.stack([
        d - anh_g,
        d + anh_s,
        d,
        d - 2 * anh_g - beta_g,
        d - anh_g + anh_s,
    ])
    diverged = np.any(np.abs(dens) < pole_eps, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = 2 * j2 * (1 / dens[0] - 1 / dens[1])
        z2 = j2 * (-1 / dens[2] + 2 / dens[0] + 3 / dens[3] - 4 / dens[4])
    z1 = np.where(diverged, np.nan, z1)
    z2 = np.where(diverged, np.nan, z2)
    return z1, z2, diverged


def shifts(gate: TransmonSpec, spec: TransmonSpec, j: float, pole_eps: float = POLE_EPS) -> ShiftTriple:
    """Dispersive shifts of ``gate`` due to spectator ``spec`` at coupling ``j``.

    The |21> <-> |30> pole sits at ``2*anh_g + beta_g``, which includes the
    sextic correction of the gate qubit.
    """
    z1, z2, div = zeta_curves(
        spec.freq - gate.freq, gate.anh, spec.anh, j, beta_g=gate.beta, pole_eps=pole_eps
    )
    if bool(div):
        return ShiftTriple.divergent()
    return ShiftTriple(float(z1), float(z2))


def gate_detuning(ctx: GateContext, shift_map: Mapping[str, ShiftTriple], config: SpectatorConfig) -> float:
    """Detuning E11 - E02 (MHz) induced by the excited spectators.

    Spectators on g1 shift |11> by ``zeta1``; spectators on g2 shift |11> by
    ``zeta1`` and |02> by ``zeta2``, a net ``-zeta12``. Spectators in |0>
    contribute nothing. Returns NaN if a contributing shift diverged.
    """
    config.check(ctx)
    delta = 0.0
    for label in config.excited():
        s = shift_map[label]
        if s.diverged:
            return math.nan
        if ctx.role(label) is Role.COMPUTATIONAL:
            delta += s.zeta1
        else:
            delta -= s.zeta12
    return delta


def conditional_phase_error(delta: float, j: float) -> float:
    """Conditional phase error in degrees for gate detuning ``delta`` and coupling ``j``."""
    if not j > 0:
        raise ValueError(f"coupling must be positive, got {j}")
    return 180.0 * delta / (2 * math.sqrt(2) * j)


def conditional_phase_error_tg(delta: float, t_g: float) -> float:
    """Same error written through the gate time: half of ``delta`` accumulated over ``t_g``.

    Equal to :func:`conditional_phase_error` when ``t_g = gate_duration_from_j(j)``.
    """
    return 0.5 * DEG_PER_MHZ_NS * delta * t_g


def leakage_error(delta: float, j: float) -> float:
    """Population left in |02> after the gate for a |0>+|1>, |1> preparation."""
    if not j > 0:
        raise ValueError(f"coupling must be positive, got {j}")
    x = delta / (2 * math.sqrt(2) * j)
    if abs(x) > LEAKAGE_VALIDITY:
        raise ValueError(
            f"|delta/(2 sqrt2 J)| = {abs(x):.3g} exceeds {LEAKAGE_VALIDITY}; "
            "the quartic leakage law is a small-detuning expansion"
        )
    return 0.5 * (math.pi / 2) ** 2 * x ** 4


def dynamical_phase_error(zeta1_tot: float, ctx: GateContext) -> float:
    """Single-qubit phase error (degrees) on a gate qubit over ``t_g + 2 t_b + t_s``."""
    return -DEG_PER_MHZ_NS * zeta1_tot * ctx.window


class SpectatorCase(str, enum.Enum):
    """Which gate-qubit roundtrip the spectator sees, by state of the distant gate qubit."""

    COMPUTATIONAL_DISTANT_0 = "computational-distant-0"
    COMPUTATIONAL_DISTANT_1 = "computational-distant-1"
    LEAKAGE_DISTANT_0 = "leakage-distant-0"
    LEAKAGE_DISTANT_1 = "leakage-distant-1"


def spectator_phase_error(
    variant, zeta1: float, zeta2: float, zeta1_idle: float, ctx: GateContext
) -> float:
    """Phase error (degrees) picked up by the spectator itself.

    For the computational cases the neighbouring gate qubit sits in |1>
    (distant qubit in |0>) or spends half the gate in |0> (distant in |1>).
    For the leakage cases it stays in |1> at the gate frequency, or spends the
    gate half in |1> and half in |2>; ``zeta1_idle`` covers the buffers and
    single-qubit gate at the idle frequency.
    """
    case = SpectatorCase(variant)
    tg, idle = ctx.t_g, 2 * ctx.t_b + ctx.t_s
    if case is SpectatorCase.COMPUTATIONAL_DISTANT_0:
        cycles = -zeta1 * (tg + idle)
    elif case is SpectatorCase.COMPUTATIONAL_DISTANT_1:
        cycles = -zeta1 * (0.5 * tg + idle)
    elif case is SpectatorCase.LEAKAGE_DISTANT_0:
        cycles = -zeta1 * tg - zeta1_idle * idle
    else:
        cycles = -(0.5 * zeta1 + 0.5 * zeta2) * tg - zeta1_idle * idle
    return DEG_PER_MHZ_NS * cycles


def zeta1_total(per_spectator: Iterable[tuple[float, int]]) -> float:
    """Sum of ``zeta1`` over spectators whose bit is 1."""
    total = 0.0
    for zeta, bit in per_spectator:
        if bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {bit!r}")
        total += bit * zeta
    return total


@dataclass
class PhaseErrorReport:
    d_phi_c: float
    d_phi_d: dict[str, float]
    d_phi_s: dict[str, float]
    d_leak: float
    zeta1_tot: float
    delta: float
    diverged: bool = False
    notes: list[str] = field(default_factory=list)


def phase_error_report(
    ctx: GateContext,
    shift_map: Mapping[str, ShiftTriple],
    config: SpectatorConfig,
    j: float | None = None,
) -> PhaseErrorReport:
    """Collect all phase and leakage errors for one spectator configuration.

    The conditional phase error uses the half-gate form ``0.5*delta*t_g`` so it
    shares ``t_g`` with the dynamical phases; ``j`` (the g1-g2 coupling, by
    default the one implied by ``t_g``) only enters the leakage estimate.
    """
    config.check(ctx)
    if j is None:
        j = 1e3 / (2 * math.sqrt(2) * ctx.t_g)
    delta = gate_detuning(ctx, shift_map, config)
    diverged = math.isnan(delta)
    notes = []

    per_gate = {ctx.g1: 0.0, ctx.g2: 0.0}
    d_phi_s = {}
    for label in ctx.labels:
        s = shift_map[label]
        bit = config.bits[label]
        comp = ctx.role(label) is Role.COMPUTATIONAL
        per_gate[ctx.neighbor(label)] += bit * s.zeta1 if bit else 0.0
        if bit:
            case = SpectatorCase.COMPUTATIONAL_DISTANT_0 if comp else SpectatorCase.LEAKAGE_DISTANT_0
            d_phi_s[label] = spectator_phase_error(case, s.zeta1, s.zeta2, s.zeta1, ctx)
        else:
            d_phi_s[label] = 0.0

    d_phi_d = {g: dynamical_phase_error(z, ctx) for g, z in per_gate.items()}
    if diverged:
        d_phi_c = d_leak = math.nan
        notes.append("pole")
    else:
        d_phi_c = conditional_phase_error_tg(delta, ctx.t_g)
        try:
            d_leak = leakage_error(delta, j)
        except ValueError:
            d_leak = math.nan
            notes.append("leakage outside perturbative range")
    return PhaseErrorReport(
        d_phi_c=d_phi_c,
        d_phi_d=d_phi_d,
        d_phi_s=d_phi_s,
        d_leak=d_leak,
        zeta1_tot=per_gate[ctx.g1],
        delta=delta,
        diverged=diverged,
        notes=notes,
    )
