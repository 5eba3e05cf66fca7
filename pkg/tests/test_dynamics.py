import csv
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from czspectator import kernels
from czspectator.device import NumericalError, TransmonSpec
from czspectator.dispersive import conditional_phase_error, leakage_error
from czspectator.dynamics import (
    PulseShape,
    TwoLevelGateProblem,
    calibrate_pulse,
    phase_offset,
    resonance_amplitude,
    simulate_full_pair,
    simulate_two_level,
    write_trajectory_csv,
)

J = 4.5
DELTA_MAX = 0.1 * 2 * math.sqrt(2) * J


def offset(delta, **kw):
    out = simulate_two_level(TwoLevelGateProblem.from_j(J, delta, **kw))
    return phase_offset(out.phi_c), out


def test_pulse_shape():
    rect = PulseShape(100.0, 50.0, sigma=0.0)
    assert rect.window == (0.0, 50.0)
    assert rect.envelope([-1.0, 10.0, 49.0, 51.0]).tolist() == [0.0, 1.0, 1.0, 0.0]
    p = PulseShape(100.0, 50.0, sigma=1.0)
    assert p.window == (-4.0, 54.0)
    t = np.linspace(*p.window, 20001)
    assert trapezoid(p.envelope(t), t) == pytest.approx(50.0, abs=1e-3)
    assert p.envelope(0.0) == pytest.approx(0.5)
    for bad in (dict(duration=0.0), dict(sigma=-1.0), dict(amplitude=math.inf)):
        args = dict(amplitude=1.0, duration=10.0, sigma=1.0) | bad
        with pytest.raises(ValueError):
            PulseShape(**args)


def test_resonant_gate_is_cz():
    d, out = offset(0.0)
    assert abs(d) < 1e-6
    assert out.p02 < 1e-12
    assert out.norm_error < 1e-9


def test_one_megahertz():
    d, out = offset(1.0, sigma=0.0)
    assert d == pytest.approx(14.1, rel=0.02)
    assert out.leak == pytest.approx(4.71e-5, rel=0.2)


def test_linear_in_delta():
    deltas = np.linspace(-DELTA_MAX, DELTA_MAX, 5)
    phis = [offset(d)[0] for d in deltas]
    slope = np.polyfit(deltas, phis, 1)[0]
    assert slope == pytest.approx(conditional_phase_error(1.0, J), rel=0.02)


def test_quartic_leakage():
    d = 0.5 * DELTA_MAX
    _, small = offset(d)
    _, big = offset(2 * d)
    assert big.leak / small.leak == pytest.approx(16.0, rel=0.2)
    assert big.leak == pytest.approx(leakage_error(2 * d, J), rel=0.2)


def test_filter_limit():
    a, _ = offset(0.8, sigma=0.01)
    b, _ = offset(0.8, sigma=0.0)
    assert abs(a - b) < 0.1


def test_dt_too_coarse():
    with pytest.raises(ValueError):
        simulate_two_level(TwoLevelGateProblem.from_j(J, 0.5), dt=0.5)


def test_problem_validation():
    with pytest.raises(ValueError):
        TwoLevelGateProblem(0.0, 0.0, PulseShape(1.0, 10.0))


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_backends_agree(backend):
    out = simulate_two_level(TwoLevelGateProblem.from_j(J, 0.7, sigma=1.0), backend=backend)
    base = simulate_two_level(TwoLevelGateProblem.from_j(J, 0.7, sigma=1.0), backend="python")
    assert out.phi_c == pytest.approx(base.phi_c, abs=1e-9)


def test_trajectory(tmp_path):
    out = simulate_two_level(TwoLevelGateProblem.from_j(J, 0.3), record_every=500)
    traj = out.trajectory
    assert traj[0, 0] == pytest.approx(0.0)
    assert np.allclose(np.sum(traj[:, 1:] ** 2, axis=1), 1.0, atol=1e-9)
    path = tmp_path / "t.csv"
    write_trajectory_csv(out, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t_ns", "re_11", "im_11", "re_02", "im_02"]
    assert len(rows) == len(traj) + 1
    with pytest.raises(ValueError):
        write_trajectory_csv(simulate_two_level(TwoLevelGateProblem.from_j(J)), path)


def test_phase_offset_wrap():
    assert phase_offset(190.0) == pytest.approx(10.0)
    assert phase_offset(170.0) == pytest.approx(-10.0)
    assert phase_offset(0.0) == 180.0


# --- two transmons ------------------------------------------------------------

G1 = TransmonSpec("A", 4900.0, -300.0)
G2 = TransmonSpec("B", 5500.0, -295.0)


@pytest.fixture(scope="module")
def calibrated():
    return calibrate_pulse(G1, G2, J)


def test_calibration(calibrated):
    assert calibrated.amplitude == pytest.approx(resonance_amplitude(G1, G2), abs=10.0)
    assert calibrated.duration == pytest.approx(1e3 / (2 * math.sqrt(2) * J), rel=0.05)
    out = simulate_full_pair(G1, G2, J, calibrated)
    assert abs(phase_offset(out.phi_c)) < 0.05
    assert out.leak < 1e-3
    assert out.norm_error < 1e-9
    assert calibrate_pulse(G1, G2, J, initial=calibrated) is calibrated


def test_spectator_detuning_matches_formula(calibrated):
    delta = 0.334
    out = simulate_full_pair(G1, G2, J, calibrated, spectator_delta=delta)
    assert phase_offset(out.phi_c) == pytest.approx(conditional_phase_error(delta, J), rel=0.03)


def test_no_coupling_no_conditional_phase(calibrated):
    out = simulate_full_pair(G1, G2, 0.0, calibrated)
    assert abs(phase_offset(out.phi_c, 0.0)) < 1e-9
    assert out.leak < 1e-20


def test_no_coupling_fails():
    with pytest.raises(NumericalError):
        calibrate_pulse(G1, G2, 0.0)


def test_pair_validation():
    p = PulseShape(-300.0, 78.0)
    with pytest.raises(ValueError):
        simulate_full_pair(G1, G2, J, p, dims=2)
    with pytest.raises(ValueError):
        simulate_full_pair(G1, G2, J, p, tune="g3")
