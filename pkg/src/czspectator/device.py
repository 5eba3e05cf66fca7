"""Device description: transmons, exchange couplings and gate timing.

Frequencies are ordinary frequencies (omega/2pi) in MHz and times are in ns.
Conversion to angular units happens only where Hamiltonians are built or
phases are accumulated.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

#: 10^3 / (2 sqrt 2): gate duration in ns times coupling in MHz
DURATION_COUPLING_PRODUCT = 1e3 / (2.0 * math.sqrt(2.0))

# Below this a "MHz" frequency is almost certainly a GHz value.
_MIN_FREQ_MHZ = 100.0


class DeviceError(ValueError):
    """Invalid device description; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or produced no usable result."""


@dataclass(frozen=True)
class TransmonSpec:
    id: str
    freq: float
    anh: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError(f"{self.id}: frequency must be positive, got {self.freq}")
        if not self.anh < 0:
            raise ValueError(f"{self.id}: anharmonicity must be negative, got {self.anh}")
        if not abs(self.beta) < abs(self.anh):
            raise ValueError(f"{self.id}: |beta| must be below |anh|, got {self.beta}")


@dataclass(frozen=True)
class Coupling:
    a: str
    b: str
    j: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"coupling endpoints must differ, got {self.a!r} twice")
        if not self.j > 0:
            raise ValueError(f"coupling {self.a}-{self.b}: j must be positive, got {self.j}")

    @property
    def key(self) -> frozenset:
        return frozenset((self.a, self.b))


@dataclass(frozen=True)
class DeviceTopology:
    qubits: tuple[TransmonSpec, ...] = ()
    couplings: tuple[Coupling, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        ids = [q.id for q in self.qubits]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate qubit id")
        seen = set()
        for c in self.couplings:
            for end in (c.a, c.b):
                if end not in ids:
                    raise ValueError(f"coupling {c.a}-{c.b} refers to undeclared qubit {end!r}")
            if c.key in seen:
                raise ValueError(f"more than one coupling between {c.a} and {c.b}")
            seen.add(c.key)

    def qubit(self, label: str) -> TransmonSpec:
        for q in self.qubits:
            if q.id == label:
                return q
        raise KeyError(label)

    def coupling(self, a: str, b: str) -> float:
        """Exchange coupling J/2pi in MHz between ``a`` and ``b`` (0 if uncoupled)."""
        key = frozenset((a, b))
        for c in self.couplings:
            if c.key == key:
                return c.j
        return 0.0

    def neighbors(self, label: str) -> list[str]:
        out = []
        for c in self.couplings:
            if c.a == label:
                out.append(c.b)
            elif c.b == label:
                out.append(c.a)
        return out

    def to_dict(self) -> dict:
        return {
            "qubits": [
                {"id": q.id, "freq_mhz": q.freq, "anh_mhz": q.anh, "beta_mhz": q.beta}
                for q in self.qubits
            ],
            "couplings": [{"a": c.a, "b": c.b, "j_mhz": c.j} for c in self.couplings],
        }


class Role(str, enum.Enum):
    """Which gate qubit a spectator is coupled to."""

    COMPUTATIONAL = "on-computational-qubit"  # neighbour of g1, stays in {0, 1}
    LEAKAGE = "on-leakage-qubit"  # neighbour of g2, whose |2> takes part in the gate

    @classmethod
    def parse(cls, text) -> "Role":
        if isinstance(text, cls):
            return text
        aliases = {
            "c": cls.COMPUTATIONAL, "comp": cls.COMPUTATIONAL, "computational": cls.COMPUTATIONAL,
            "s1": cls.COMPUTATIONAL, "l": cls.LEAKAGE, "leak": cls.LEAKAGE,
            "leakage": cls.LEAKAGE, "s2": cls.LEAKAGE,
        }
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class GateContext:
    """A controlled-phase gate between ``g1`` and ``g2`` plus its spectators.

    ``g2`` is the qubit whose second excited state is used (|11> <-> |02>).
    Times are in ns: gate ``t_g``, buffer ``t_b`` on each side of the flux
    pulse, single-qubit gate ``t_s``.
    """

    g1: str
    g2: str
    spectators: tuple[tuple[str, Role], ...] = ()
    t_g: float = 80.0
    t_b: float = 5.0
    t_s: float = 53.0

    def __post_init__(self):
        specs = tuple((label, Role.parse(role)) for label, role in self.spectators)
        object.__setattr__(self, "spectators", specs)
        if self.g1 == self.g2:
            raise ValueError("gate qubits must differ")
        labels = [s for s, _ in specs]
        if len(set(labels)) != len(labels):
            raise ValueError("spectator labels must be distinct")
        if {self.g1, self.g2} & set(labels):
            raise ValueError("a gate qubit cannot also be a spectator")
        for name in ("t_g", "t_b", "t_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def labels(self) -> list[str]:
        return [s for s, _ in self.spectators]

    def role(self, label: str) -> Role:
        return dict(self.spectators)[label]

    def neighbor(self, label: str) -> str:
        """Gate qubit that spectator ``label`` is coupled to."""
        return self.g1 if self.role(label) is Role.COMPUTATIONAL else self.g2

    @property
    def window(self) -> float:
        """Idle-plus-gate window t_g + 2 t_b + t_s over which phases accumulate."""
        return self.t_g + 2 * self.t_b + self.t_s


@dataclass(frozen=True)
class SpectatorConfig:
    bits: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for label, bit in self.bits.items():
            if bit not in (0, 1):
                raise ValueError(f"spectator {label}: bit must be 0 or 1, got {bit!r}")

    def check(self, ctx: GateContext) -> None:
        if set(self.bits) != set(ctx.labels):
            raise ValueError(
                f"configuration keys {sorted(self.bits)} do not match spectators {sorted(ctx.labels)}"
            )

    def excited(self) -> list[str]:
        return [k for k, v in self.bits.items() if v]

    def ket(self, order: Sequence[str]) -> str:
        return "|" + "".join(str(self.bits[k]) for k in order) + ">"


def all_configs(ctx: GateContext) -> list[SpectatorConfig]:
    """Every spectator configuration, first spectator as most significant bit."""
    labels = ctx.labels
    k = len(labels)
    return [
        SpectatorConfig({lab: (n >> (k - 1 - i)) & 1 for i, lab in enumerate(labels)})
        for n in range(2 ** k)
    ]


def gate_duration_from_j(j: float) -> float:
    """Duration in ns of the non-adiabatic CZ gate for coupling J/2pi = ``j`` MHz."""
    if not j > 0:
        raise ValueError(f"coupling must be positive, got {j}")
    return DURATION_COUPLING_PRODUCT / j


_QUBIT_KEYS = {"id", "freq_mhz", "anh_mhz", "beta_mhz"}
_COUPLING_KEYS = {"a", "b", "j_mhz"}


def _number(obj, key, path, required=True, default=None):
    if key not in obj:
        if required:
            raise DeviceError(f"{path}.{key}", "missing required field")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DeviceError(f"{path}.{key}", f"expected a finite number, got {value!r}")
    return float(value)


def parse_device(data) -> DeviceTopology:
    """Validate a decoded device document and build the topology."""
    if not isinstance(data, dict):
        raise DeviceError("$", "top level must be an object")
    extra = set(data) - {"qubits", "couplings"}
    if extra:
        raise DeviceError(f"$.{sorted(extra)[0]}", "unknown key")
    raw_qubits = data.get("qubits", [])
    raw_couplings = data.get("couplings", [])
    if not isinstance(raw_qubits, list):
        raise DeviceError("$.qubits", "must be a list")
    if not isinstance(raw_couplings, list):
        raise DeviceError("$.couplings", "must be a list")

    qubits = []
    ids = set()
    for i, q in enumerate(raw_qubits):
        path = f"$.qubits[{i}]"
        if not isinstance(q, dict):
            raise DeviceError(path, "must be an object")
        extra = set(q) - _QUBIT_KEYS
        if extra:
            raise DeviceError(f"{path}.{sorted(extra)[0]}", "unknown key")
        qid = q.get("id")
        if not isinstance(qid, str) or not qid:
            raise DeviceError(f"{path}.id", "must be a non-empty string")
        if qid in ids:
            raise DeviceError(f"{path}.id", f"duplicate qubit id {qid!r}")
        ids.add(qid)
        freq = _number(q, "freq_mhz", path)
        anh = _number(q, "anh_mhz", path)
        beta = _number(q, "beta_mhz", path, required=False, default=0.0)
        if freq < _MIN_FREQ_MHZ:
            raise DeviceError(f"{path}.freq_mhz", f"{freq} is not a MHz frequency (GHz given?)")
        if not anh < 0:
            raise DeviceError(f"{path}.anh_mhz", "anharmonicity must be negative")
        if abs(anh) >= freq:
            raise DeviceError(f"{path}.anh_mhz", "|anharmonicity| exceeds the frequency")
        if not abs(beta) < abs(anh):
            raise DeviceError(f"{path}.beta_mhz", "|beta| must be smaller than |anh|")
        qubits.append(TransmonSpec(qid, freq, anh, beta))

    couplings = []
    pairs = set()
    for i, c in enumerate(raw_couplings):
        path = f"$.couplings[{i}]"
        if not isinstance(c, dict):
            raise DeviceError(path, "must be an object")
        extra = set(c) - _COUPLING_KEYS
        if extra:
            raise DeviceError(f"{path}.{sorted(extra)[0]}", "unknown key")
        for end in ("a", "b"):
            label = c.get(end)
            if not isinstance(label, str):
                raise DeviceError(f"{path}.{end}", "must be a qubit label")
            if label not in ids:
                raise DeviceError(f"{path}.{end}", f"dangling coupling to undeclared qubit {label!r}")
        if c["a"] == c["b"]:
            raise DeviceError(f"{path}.b", "self-coupling")
        j = _number(c, "j_mhz", path)
        if not j > 0:
            raise DeviceError(f"{path}.j_mhz", "coupling must be positive")
        if j > _MIN_FREQ_MHZ:
            raise DeviceError(f"{path}.j_mhz", f"{j} MHz is outside the dispersive regime")
        key = frozenset((c["a"], c["b"]))
        if key in pairs:
            raise DeviceError(path, f"second coupling between {c['a']} and {c['b']}")
        pairs.add(key)
        couplings.append(Coupling(c["a"], c["b"], j))
    return DeviceTopology(tuple(qubits), tuple(couplings))


def load_device(path) -> DeviceTopology:
    """Read and validate a JSON device file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DeviceError("$", f"not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    return parse_device(data)


def save_device(topology: DeviceTopology, path) -> None:
    Path(path).write_text(json.dumps(topology.to_dict(), indent=2) + "\n")


def example_device_path() -> Path:
    """Bundled seven-qubit example device."""
    return Path(__file__).with_name("data") / "device_7q.json"
