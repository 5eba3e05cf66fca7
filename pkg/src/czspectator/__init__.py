"""Error model and simulator for CZ gates with dispersively coupled neighbouring qubits."""

from czspectator.device import (
    Coupling,
    DeviceError,
    DeviceTopology,
    GateContext,
    NumericalError,
    Role,
    SpectatorConfig,
    TransmonSpec,
    all_configs,
    gate_duration_from_j,
    load_device,
    parse_device,
)
from czspectator.dispersive import PhaseErrorReport, ShiftTriple, phase_error_report, shifts
from czspectator.kernels import BACKEND
from czspectator.oracle import exact_shifts_at, transmon_beta
from czspectator.tomography import phase_error, process_error

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Coupling", "DeviceError", "DeviceTopology", "GateContext", "NumericalError",
    "PhaseErrorReport", "Role", "ShiftTriple", "SpectatorConfig", "TransmonSpec", "all_configs",
    "exact_shifts_at", "gate_duration_from_j", "load_device", "parse_device", "phase_error",
    "phase_error_report", "process_error", "shifts", "transmon_beta",
]
