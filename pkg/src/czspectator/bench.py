"""Scenario runners: detuning sweeps, spectator error budgets, Ramsey fringes, figures.

Everything here composes the lower-level modules; no formula is restated.
Tables are lists of dicts with a fixed column order, written by
:func:`write_csv` with nine significant digits and empty cells for values
that are undefined at a flagged point.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from czspectator import dispersive as dc
from czspectator import oracle, tomography
from czspectator.device import (
    DeviceTopology,
    GateContext,
    NumericalError,
    Role,
    SpectatorConfig,
    TransmonSpec,
    all_configs,
    example_device_path,
    load_device,
)

MAX_SPECTATORS = 12
SWEEP_PARAMETERS = ("spectator_detuning", "gate_detuning_delta", "zeta1_tot")


def parallel_map(fn, items, workers: int = 1):
    """Order-preserving map; ``workers > 1`` spreads items over processes."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def gate_coupling(ctx: GateContext, device: DeviceTopology | None) -> float:
    """g1-g2 coupling from the device, else the value implied by ``t_g``."""
    if device is not None:
        j = device.coupling(ctx.g1, ctx.g2)
        if j > 0:
            return j
    return 1e3 / (2 * math.sqrt(2) * ctx.t_g)


def spectator_shifts(
    ctx: GateContext, device: DeviceTopology, pole_eps: float = dc.POLE_EPS
) -> dict[str, dc.ShiftTriple]:
    """Shifts of each spectator's neighbouring gate qubit, at idle frequencies."""
    out = {}
    for label in ctx.labels:
        gate = device.qubit(ctx.neighbor(label))
        j = device.coupling(gate.id, label)
        if not j > 0:
            raise ValueError(f"spectator {label} is not coupled to gate qubit {gate.id}")
        out[label] = dc.shifts(gate, device.qubit(label), j, pole_eps)
    return out


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int
    ctx: GateContext
    device: DeviceTopology | None = None
    spectator: str | None = None
    pole_eps: float = dc.POLE_EPS
    exact: bool = False
    dims: int = 4

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}")
        if self.points < 2:
            raise ValueError("a sweep needs at least two points")
        if self.start == self.stop:
            raise ValueError("start and stop must differ")
        if self.parameter == "spectator_detuning":
            if self.device is None:
                raise ValueError("a spectator-detuning sweep needs a device")
            if not self.ctx.spectators:
                raise ValueError("the gate context has no spectators")
            if self.spectator is not None and self.spectator not in self.ctx.labels:
                raise ValueError(f"{self.spectator!r} is not a spectator of this gate")

    @property
    def xs(self) -> np.ndarray:
        return np.sort(np.linspace(self.start, self.stop, self.points))


SWEEP_COLUMNS = [
    "x", "delta_mhz", "d_phi_c_deg", "d_leak", "d_phi_d_deg", "zeta1_mhz", "zeta2_mhz",
    "zeta12_mhz", "diverged", "exact_zeta1_mhz", "exact_zeta12_mhz", "hybridized", "eps_cz",
]


def _leak_or_nan(delta, j):
    try:
        return dc.leakage_error(delta, j)
    except ValueError:
        return math.nan


def _detuning_point(x, *, gate, spec, j_pair, j_gate, role, ctx, pole_eps, exact, dims):
    s = TransmonSpec(spec.id, gate.freq + x, spec.anh, spec.beta)
    sh = dc.shifts(gate, s, j_pair, pole_eps)
    row = dict.fromkeys(SWEEP_COLUMNS, math.nan)
    row.update(x=x, diverged=sh.diverged, hybridized=False)
    if not sh.diverged:
        delta = sh.zeta1 if role is Role.COMPUTATIONAL else -sh.zeta12
        row.update(
            delta_mhz=delta,
            d_phi_c_deg=dc.conditional_phase_error(delta, j_gate),
            d_leak=_leak_or_nan(delta, j_gate),
            d_phi_d_deg=dc.dynamical_phase_error(sh.zeta1, ctx),
            zeta1_mhz=sh.zeta1,
            zeta2_mhz=sh.zeta2,
            zeta12_mhz=sh.zeta12,
        )
    if exact:
        ex = oracle.exact_shifts_at(gate, s, j_pair, dims)
        row.update(hybridized=ex.diverged, exact_zeta1_mhz=ex.zeta1, exact_zeta12_mhz=ex.zeta12)
    return row


def _delta_point(x, *, j_gate, ctx):
    row = dict.fromkeys(SWEEP_COLUMNS, math.nan)
    row.update(
        x=x, delta_mhz=x, diverged=False, hybridized=False,
        d_phi_c_deg=dc.conditional_phase_error(x, j_gate),
        d_leak=_leak_or_nan(x, j_gate),
    )
    return row


def _zeta_tot_point(x, *, j_gate, ctx):
    d_phi_d = dc.dynamical_phase_error(x, ctx)
    d_phi_c = dc.conditional_phase_error_tg(x, ctx.t_g)
    row = dict.fromkeys(SWEEP_COLUMNS, math.nan)
    row.update(
        x=x, delta_mhz=x, diverged=False, hybridized=False,
        d_phi_c_deg=d_phi_c, d_phi_d_deg=d_phi_d,
        d_leak=_leak_or_nan(x, j_gate), zeta1_mhz=x,
        eps_cz=tomography.phase_error(d_phi_d, 0.0, d_phi_c),
    )
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """Evaluate the perturbative error model along one parameter.

    ``spectator_detuning`` moves one spectator (default: the first) relative
    to its neighbouring gate qubit; ``x`` is f_spectator - f_gate in MHz.
    ``gate_detuning_delta`` takes ``x`` as the |11>-|02> detuning directly.
    ``zeta1_tot`` takes ``x`` as the total shift of g1 and adds the CZ error.
    """
    ctx = spec.ctx
    j_gate = gate_coupling(ctx, spec.device)
    if spec.parameter == "spectator_detuning":
        label = spec.spectator or ctx.labels[0]
        gate = spec.device.qubit(ctx.neighbor(label))
        j_pair = spec.device.coupling(gate.id, label)
        if not j_pair > 0:
            raise ValueError(f"spectator {label} is not coupled to gate qubit {gate.id}")
        fn = partial(
            _detuning_point, gate=gate, spec=spec.device.qubit(label), j_pair=j_pair,
            j_gate=j_gate, role=ctx.role(label), ctx=ctx, pole_eps=spec.pole_eps,
            exact=spec.exact, dims=spec.dims,
        )
    elif spec.parameter == "gate_detuning_delta":
        fn = partial(_delta_point, j_gate=j_gate, ctx=ctx)
    else:
        fn = partial(_zeta_tot_point, j_gate=j_gate, ctx=ctx)
    rows = parallel_map(fn, [float(x) for x in spec.xs], workers)
    if all(r["diverged"] for r in rows):
        raise NumericalError("every sweep point sits at a pole")
    return rows


# --- budgets ----------------------------------------------------------------


@dataclass
class BudgetRow:
    config: SpectatorConfig
    report: dc.PhaseErrorReport
    eps_cz: float


def _budget_row(config, *, ctx, shift_map, j_gate):
    rep = dc.phase_error_report(ctx, shift_map, config, j_gate)
    if rep.diverged:
        eps = math.nan
    else:
        eps = tomography.phase_error(rep.d_phi_d[ctx.g1], rep.d_phi_d[ctx.g2], rep.d_phi_c)
    return BudgetRow(config, rep, eps)


def run_budget(
    ctx: GateContext,
    device: DeviceTopology,
    pole_eps: float = dc.POLE_EPS,
    workers: int = 1,
    shift_map: dict[str, dc.ShiftTriple] | None = None,
) -> list[BudgetRow]:
    """Errors for every spectator configuration, in binary order of the bits.

    ``shift_map`` overrides the device-derived shifts, e.g. with measured values.
    """
    if len(ctx.labels) > MAX_SPECTATORS:
        raise ValueError(f"{len(ctx.labels)} spectators exceed the enumeration cap of {MAX_SPECTATORS}")
    if shift_map is None:
        shift_map = spectator_shifts(ctx, device, pole_eps)
    fn = partial(_budget_row, ctx=ctx, shift_map=shift_map, j_gate=gate_coupling(ctx, device))
    return parallel_map(fn, all_configs(ctx), workers)


BUDGET_COLUMNS = [
    "config", "zeta1_tot_mhz", "delta_mhz", "d_phi_c_deg", "d_phi_d_g1_deg",
    "d_phi_d_g2_deg", "d_leak", "eps_cz", "diverged",
]


def budget_table(ctx: GateContext, rows: Sequence[BudgetRow]) -> list[dict]:
    out = []
    for r in rows:
        rep = r.report
        entry = {
            "config": r.config.ket(ctx.labels),
            "zeta1_tot_mhz": rep.zeta1_tot,
            "delta_mhz": rep.delta,
            "d_phi_c_deg": rep.d_phi_c,
            "d_phi_d_g1_deg": rep.d_phi_d[ctx.g1],
            "d_phi_d_g2_deg": rep.d_phi_d[ctx.g2],
            "d_leak": rep.d_leak,
            "eps_cz": r.eps_cz,
            "diverged": rep.diverged,
        }
        for label in ctx.labels:
            entry[f"d_phi_s_{label}_deg"] = rep.d_phi_s[label]
        out.append(entry)
    return out


# --- Ramsey fringes ---------------------------------------------------------

RAMSEY_POINTS = 12
RAMSEY_CONTRAST = 0.8


@dataclass
class SineFit:
    offset: float
    amplitude: float
    phase: float  # degrees, P = offset + amplitude * cos(phi + phase)
    phase_sigma: float  # degrees


@dataclass
class RamseyResult:
    phases: np.ndarray  # degrees
    control0: np.ndarray
    control1: np.ndarray
    fit0: SineFit
    fit1: SineFit
    difference: float  # degrees in [0, 360)
    sigma: float  # degrees

    @property
    def d_phi_c(self) -> float:
        return self.difference - 180.0


def fit_sinusoid(phases_deg, data, shots: int | None = None) -> SineFit:
    """Linear least-squares fit of ``a + b cos(phi) + c sin(phi)``.

    With ``shots`` the points are weighted by their binomial variance at the
    fitted curve and the phase uncertainty comes from the fit covariance.
    """
    phi = np.radians(np.asarray(phases_deg, dtype=float))
    y = np.asarray(data, dtype=float)
    design = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, b, c = coef
    amp = math.hypot(b, c)
    if amp < 1e-12:
        raise NumericalError("fringe has no contrast; phase undefined")
    sigma = 0.0
    if shots:
        model = np.clip(design @ coef, 1e-9, 1 - 1e-9)
        w = shots / (model * (1 - model))
        coef, *_ = np.linalg.lstsq(design * np.sqrt(w)[:, None], y * np.sqrt(w), rcond=None)
        a, b, c = coef
        amp = math.hypot(b, c)
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
        # theta = atan2(-c, b); gradient wrt (b, c)
        grad = np.array([0.0, c / amp**2, -b / amp**2])
        sigma = math.degrees(math.sqrt(grad @ cov @ grad))
    return SineFit(a, amp, math.degrees(math.atan2(-c, b)), sigma)


def synthesize_ramsey(
    d_phi_c: float,
    contrast: float = RAMSEY_CONTRAST,
    shots: int | None = None,
    points: int = RAMSEY_POINTS,
    offset: float = 0.0,
    rng: np.random.Generator | None = None,
    seed: int = 0,
) -> RamseyResult:
    """Two Ramsey fringes, control in |0> and in |1>, and their fitted phase difference.

    The control-|1> fringe is shifted by ``180 + d_phi_c`` degrees. ``shots``
    adds binomial noise per phase point (each point averaged ``shots`` times).
    """
    if not 0 < contrast <= 1:
        raise ValueError(f"contrast must be in (0, 1], got {contrast}")
    if points < 3:
        raise ValueError("need at least three phase points")
    phases = np.arange(points) * 360.0 / points
    rad = np.radians(phases)
    shift = 180.0 + d_phi_c
    p0 = 0.5 + 0.5 * contrast * np.cos(rad + math.radians(offset))
    p1 = 0.5 + 0.5 * contrast * np.cos(rad + math.radians(offset + shift))
    if shots:
        rng = rng if rng is not None else np.random.default_rng(seed)
        p0 = rng.binomial(shots, p0) / shots
        p1 = rng.binomial(shots, p1) / shots
    f0 = fit_sinusoid(phases, p0, shots)
    f1 = fit_sinusoid(phases, p1, shots)
    diff = (f1.phase - f0.phase) % 360.0
    sigma = math.hypot(f0.phase_sigma, f1.phase_sigma)
    return RamseyResult(phases, p0, p1, f0, f1, diff, sigma)


# --- output -----------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else f"{float(v):.9g}"
    return str(v)


def write_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None):
    """Write ``rows`` to a path (returned as a Path) or to an open text stream."""
    columns = list(columns or (rows[0].keys() if rows else []))

    def dump(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])

    if hasattr(path, "write"):
        dump(path)
        return path
    path = Path(path)
    with path.open("w", newline="") as fh:
        dump(fh)
    return path


def write_svg(path, series, xlabel: str, ylabel: str, title: str = "") -> Path:
    """Minimal line chart; ``series`` maps a label to ``(x, y)`` arrays."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "czspectator"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        ax.plot(x, y, label=label, lw=1.2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# --- figure scenarios ---------------------------------------------------------

FIGURES = ("fig1c", "fig2", "fig3", "fig4")
FIG1C_J = 4.5
FIG1C_ANH = -300.0


def fig_gates(device: DeviceTopology) -> dict[str, GateContext]:
    """Gate contexts of the bundled device used by the figure scenarios."""
    return {
        "q1_on_q4": GateContext("Q4", "Q2", (("Q1", Role.COMPUTATIONAL),)),
        "q3_on_q1": GateContext("Q4", "Q1", (("Q3", Role.LEAKAGE),)),
        "three": GateContext(
            "Q4", "Q2",
            (("Q1", Role.COMPUTATIONAL), ("Q6", Role.COMPUTATIONAL), ("Q7", Role.COMPUTATIONAL)),
        ),
    }


@dataclass
class FigureOutput:
    name: str
    files: list[Path] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)


def _fig1c(device, pole_eps, dims):
    xs = np.linspace(-800.0, 800.0, 1601)
    g = TransmonSpec("G", 6000.0, FIG1C_ANH)
    z1, z2, div = dc.zeta_curves(xs, FIG1C_ANH, FIG1C_ANH, FIG1C_J, pole_eps=pole_eps)
    rows = []
    for x, a, b, d in zip(xs, z1, z2, div):
        ex = oracle.exact_shifts_at(g, TransmonSpec("S", 6000.0 + x, FIG1C_ANH), FIG1C_J, dims)
        rows.append({
            "detuning_mhz": float(x), "zeta1_mhz": a, "zeta2_mhz": b, "zeta12_mhz": b - a,
            "diverged": bool(d), "exact_zeta1_mhz": ex.zeta1, "exact_zeta2_mhz": ex.zeta2,
            "exact_zeta12_mhz": ex.zeta12, "hybridized": ex.diverged,
        })
    return {"fig1c": rows}


def _fig2(device, pole_eps, dims):
    gates = fig_gates(device)
    c = run_sweep(SweepSpec("spectator_detuning", 300.0, 800.0, 501, gates["q1_on_q4"], device,
                            pole_eps=pole_eps, exact=True, dims=dims))
    d = run_sweep(SweepSpec("spectator_detuning", -800.0, -200.0, 601, gates["q3_on_q1"], device,
                            pole_eps=pole_eps, exact=True, dims=dims))
    g = [
        {"dataset": name, "delta_mhz": r["delta_mhz"], "d_phi_c_deg": r["d_phi_c_deg"]}
        for name, rows in (("q1_spectator", c), ("q3_spectator", d))
        for r in rows if not r["diverged"]
    ]
    return {"fig2c": c, "fig2d": d, "fig2g": g}


def _fig3(device, pole_eps, dims):
    ctx = fig_gates(device)["three"]
    rows = run_budget(ctx, device, pole_eps)
    single = {}
    for r in rows:
        on = r.config.excited()
        if len(on) == 1:
            single[on[0]] = r.report.d_phi_c
    table = []
    for r in rows:
        table.append({
            "config": r.config.ket(ctx.labels),
            "zeta1_tot_mhz": r.report.zeta1_tot,
            "d_phi_c_deg": r.report.d_phi_c,
            "sum_single_d_phi_c_deg": sum(single[k] for k in r.config.excited()),
        })
    return {"fig3": table}


def _fig4(device, pole_eps, dims):
    ctx = fig_gates(device)["three"]
    rows = run_budget(ctx, device, pole_eps)
    configs = budget_table(ctx, rows)
    lo = min(r["zeta1_tot_mhz"] for r in configs)
    hi = max(r["zeta1_tot_mhz"] for r in configs)
    pad = 0.1 * (hi - lo) if hi > lo else 0.05
    curve = run_sweep(SweepSpec("zeta1_tot", lo - pad, hi + pad, 201, ctx, device))
    curve = [{"zeta1_tot_mhz": r["x"], "d_phi_c_deg": r["d_phi_c_deg"],
              "d_phi_d_deg": r["d_phi_d_deg"], "eps_cz": r["eps_cz"]} for r in curve]
    return {"fig4_configs": configs, "fig4_curve": curve}


_FIG_BUILDERS = {"fig1c": _fig1c, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4}


def _plots(name, tables):
    def col(rows, key):
        return np.array([r[key] if r[key] is not None else np.nan for r in rows], dtype=float)

    if name == "fig1c":
        t = tables["fig1c"]
        x = col(t, "detuning_mhz")
        yield "fig1c", {k: (x, 1e3 * col(t, f"{k}_mhz")) for k in ("zeta1", "zeta2", "zeta12")}, \
            "detuning (MHz)", "shift (kHz)"
    elif name == "fig2":
        for key in ("fig2c", "fig2d"):
            t = tables[key]
            yield key, {"d_phi_c": (col(t, "x"), col(t, "d_phi_c_deg"))}, "spectator detuning (MHz)", \
                "conditional phase error (deg)"
        t = tables["fig2g"]
        yield "fig2g", {"model": (col(t, "delta_mhz"), col(t, "d_phi_c_deg"))}, "delta (MHz)", \
            "conditional phase error (deg)"
    elif name == "fig3":
        t = tables["fig3"]
        idx = np.arange(len(t))
        yield "fig3", {"calculated": (idx, col(t, "d_phi_c_deg")),
                       "sum of singles": (idx, col(t, "sum_single_d_phi_c_deg"))}, \
            "configuration index", "conditional phase error (deg)"
    elif name == "fig4":
        t = tables["fig4_curve"]
        yield "fig4", {"phase errors only": (1e3 * col(t, "zeta1_tot_mhz"), 100 * col(t, "eps_cz"))}, \
            "total shift (kHz)", "CZ error increase (%)"


def reproduce_figure(
    which: str,
    out_dir,
    fmt: str = "both",
    device: DeviceTopology | None = None,
    pole_eps: float = dc.POLE_EPS,
    dims: int = 4,
) -> FigureOutput:
    """Write the CSV tables (and SVG charts) of one figure scenario to ``out_dir``."""
    if which not in _FIG_BUILDERS:
        raise ValueError(f"unknown figure {which!r}; choose from {FIGURES}")
    if fmt not in ("csv", "svg", "both"):
        raise ValueError("format must be csv, svg or both")
    if device is None:
        path = example_device_path()
        if not path.exists():
            raise FileNotFoundError(f"bundled device file missing: {path}")
        device = load_device(path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = _FIG_BUILDERS[which](device, pole_eps, dims)
    result = FigureOutput(which, tables=tables)
    if fmt in ("csv", "both"):
        for key, rows in tables.items():
            result.files.append(write_csv(rows, out_dir / f"{key}.csv"))
    if fmt in ("svg", "both"):
        for key, series, xl, yl in _plots(which, tables):
            result.files.append(write_svg(out_dir / f"{key}.svg", series, xl, yl, key))
    return result
