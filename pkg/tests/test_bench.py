import csv
import math

import numpy as np
import pytest

from czspectator import bench, tomography
from czspectator.device import GateContext, NumericalError, Role


@pytest.fixture(scope="module")
def gates(device):
    return bench.fig_gates(device)


def test_sweep_sorted_and_flagged(device, gates):
    spec = bench.SweepSpec("spectator_detuning", 800.0, 250.0, 551, gates["q1_on_q4"], device)
    rows = bench.run_sweep(spec)
    xs = [r["x"] for r in rows]
    assert xs == sorted(xs)
    flagged = [r for r in rows if r["diverged"]]
    assert flagged and all(abs(r["x"] - 289.0) <= 1.0 for r in flagged)
    assert all(math.isnan(r["d_phi_c_deg"]) for r in flagged)


def test_q1_sweep_grows_toward_pole(device, gates):
    rows = bench.run_sweep(bench.SweepSpec("spectator_detuning", 300.0, 800.0, 501, gates["q1_on_q4"], device))
    mags = [abs(r["d_phi_c_deg"]) for r in rows]
    assert all(a >= b for a, b in zip(mags, mags[1:]))
    assert mags[0] > 10 * mags[-1]


def test_q3_sweep_changes_sign_at_resonance(device, gates):
    rows = bench.run_sweep(bench.SweepSpec("spectator_detuning", -700.0, -550.0, 301, gates["q3_on_q1"], device))
    ok = [r for r in rows if not r["diverged"]]
    below = [r["d_phi_c_deg"] for r in ok if r["x"] < -625]
    above = [r["d_phi_c_deg"] for r in ok if -600 < r["x"]]
    assert np.sign(below[-1]) != np.sign(above[0])
    pole = 2 * device.qubit("Q1").anh + device.qubit("Q1").beta
    assert any(r["diverged"] and abs(r["x"] - pole) <= 1.0 for r in rows)


def test_delta_sweep_is_linear(device, gates):
    rows = bench.run_sweep(bench.SweepSpec("gate_detuning_delta", -0.5, 0.5, 11, gates["q1_on_q4"], device))
    slope = np.polyfit([r["x"] for r in rows], [r["d_phi_c_deg"] for r in rows], 1)[0]
    assert slope == pytest.approx(180 / (2 * math.sqrt(2) * 4.5))


def test_exact_columns(device, gates):
    rows = bench.run_sweep(bench.SweepSpec("spectator_detuning", 400.0, 700.0, 4, gates["q1_on_q4"], device,
                                           exact=True))
    for r in rows:
        assert abs(r["zeta1_mhz"] - r["exact_zeta1_mhz"]) <= max(0.15 * abs(r["exact_zeta1_mhz"]), 0.01)


def test_all_diverged(device, gates):
    spec = bench.SweepSpec("spectator_detuning", 288.8, 289.2, 3, gates["q1_on_q4"], device)
    with pytest.raises(NumericalError):
        bench.run_sweep(spec)


@pytest.mark.parametrize("kw", [dict(points=1), dict(start=1.0, stop=1.0), dict(parameter="nope"),
                                dict(device=None), dict(spectator="Q5")])
def test_sweep_validation(device, gates, kw):
    args = dict(parameter="spectator_detuning", start=0.0, stop=1.0, points=5, ctx=gates["q1_on_q4"],
                device=device) | kw
    with pytest.raises(ValueError):
        bench.SweepSpec(**args)


def test_parallel_matches_serial(device, gates):
    spec = bench.SweepSpec("spectator_detuning", 300.0, 800.0, 41, gates["q1_on_q4"], device, exact=True)
    a = bench.run_sweep(spec)
    b = bench.run_sweep(spec, workers=2)
    assert [r["x"] for r in a] == [r["x"] for r in b]
    assert np.allclose([r["d_phi_c_deg"] for r in a], [r["d_phi_c_deg"] for r in b], equal_nan=True)


def test_budget(device, gates):
    ctx = gates["three"]
    rows = bench.run_budget(ctx, device)
    assert len(rows) == 8
    assert rows[0].eps_cz == 0.0 and rows[0].report.d_phi_c == 0.0
    assert [r.config.ket(ctx.labels) for r in rows] == [f"|{n:03b}>" for n in range(8)]
    by_key = {r.config.ket(ctx.labels): r for r in rows}
    assert by_key["|100>"].report.d_phi_d["Q4"] == pytest.approx(6.85, abs=0.01)
    singles = {k: by_key[k].report.d_phi_c for k in ("|100>", "|010>", "|001>")}
    assert by_key["|111>"].report.d_phi_c == pytest.approx(sum(singles.values()), abs=1e-12)
    for r in rows:
        rep = r.report
        assert r.eps_cz == tomography.process_error(
            tomography.cz_error_unitary(rep.d_phi_d["Q4"], rep.d_phi_d["Q2"], rep.d_phi_c))


def test_budget_cap(device):
    labels = [f"S{i}" for i in range(13)]
    ctx = GateContext("Q4", "Q2", tuple((s, Role.COMPUTATIONAL) for s in labels))
    with pytest.raises(ValueError):
        bench.run_budget(ctx, device)


def test_budget_uncoupled_spectator(device):
    ctx = GateContext("Q4", "Q2", (("Q5", Role.COMPUTATIONAL),))
    with pytest.raises(ValueError):
        bench.run_budget(ctx, device)


def test_budget_measured_shifts(device, gates):
    from czspectator.dispersive import ShiftTriple

    ctx = gates["three"]
    measured = {"Q1": ShiftTriple(-0.133, 0.0), "Q6": ShiftTriple(-0.037, 0.0), "Q7": ShiftTriple(-0.034, 0.0)}
    rows = bench.run_budget(ctx, device, shift_map=measured)
    assert rows[-1].report.zeta1_tot == pytest.approx(-0.204)


# --- Ramsey -------------------------------------------------------------------


def test_ramsey_noiseless():
    assert bench.synthesize_ramsey(0.0).difference == pytest.approx(180.0, abs=1e-9)
    res = bench.synthesize_ramsey(14.1, contrast=0.8)
    assert abs(res.d_phi_c - 14.1) < 1e-6
    assert res.sigma == 0.0


def test_ramsey_shot_noise():
    res = bench.synthesize_ramsey(-6.3, shots=33000, seed=0)
    assert res.sigma == pytest.approx(0.2, abs=0.05)
    assert abs(res.difference - 173.7) < 4 * res.sigma
    again = bench.synthesize_ramsey(-6.3, shots=33000, seed=0)
    assert again.difference == res.difference


def test_ramsey_unbiased():
    rng = np.random.default_rng(12345)
    fits = [bench.synthesize_ramsey(-6.3, shots=33000, rng=rng).d_phi_c for _ in range(100)]
    assert np.mean(fits) == pytest.approx(-6.3, abs=0.05)


def test_ramsey_errors():
    with pytest.raises(ValueError):
        bench.synthesize_ramsey(0.0, contrast=0.0)
    with pytest.raises(ValueError):
        bench.synthesize_ramsey(0.0, points=2)
    with pytest.raises(NumericalError):
        bench.fit_sinusoid([0, 90, 180, 270], [0.5, 0.5, 0.5, 0.5])


# --- output -------------------------------------------------------------------


def test_csv_format(tmp_path):
    rows = [{"a": 1.0 / 3.0, "flag": True, "b": math.nan}, {"a": 2, "flag": False, "b": 1e-12}]
    path = bench.write_csv(rows, tmp_path / "t.csv")
    assert path.read_text().splitlines() == ["a,flag,b", "0.333333333,true,", "2,false,1e-12"]


def test_figures(tmp_path, device):
    out = bench.reproduce_figure("fig1c", tmp_path, fmt="both")
    names = sorted(p.name for p in out.files)
    assert names == ["fig1c.csv", "fig1c.svg"]
    rows = list(csv.DictReader((tmp_path / "fig1c.csv").open()))
    assert len(rows) == 1601
    flagged = {float(r["detuning_mhz"]) for r in rows if r["diverged"] == "true"}
    for pole in (-600.0, -300.0, 0.0, 300.0):
        assert pole in flagged
    assert all(r["zeta1_mhz"] == "" for r in rows if r["diverged"] == "true")


def test_figure_determinism(tmp_path):
    a = bench.reproduce_figure("fig2", tmp_path / "a", fmt="both")
    b = bench.reproduce_figure("fig2", tmp_path / "b", fmt="both")
    for fa, fb in zip(a.files, b.files):
        assert fa.read_bytes() == fb.read_bytes()


def test_fig3_fig4(tmp_path):
    t3 = bench.reproduce_figure("fig3", tmp_path, fmt="csv").tables["fig3"]
    assert len(t3) == 8
    for r in t3:
        assert r["d_phi_c_deg"] == pytest.approx(r["sum_single_d_phi_c_deg"], abs=1e-12)
    t4 = bench.reproduce_figure("fig4", tmp_path, fmt="csv").tables
    assert len(t4["fig4_configs"]) == 8
    assert 0.001 <= max(r["eps_cz"] for r in t4["fig4_configs"]) <= 0.01


def test_figure_errors(tmp_path):
    with pytest.raises(ValueError):
        bench.reproduce_figure("fig9", tmp_path)
    with pytest.raises(ValueError):
        bench.reproduce_figure("fig1c", tmp_path, fmt="png")
