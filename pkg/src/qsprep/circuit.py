"""Circuit IR: typed gates, CNOT accounting, lowering, inversion and QASM I/O.

Qubits are 1-based with qubit 1 the most significant bit; QASM uses
``q[qubit - 1]``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Union

if TYPE_CHECKING:  # pragma: no cover
    from .mcry import RotationTable

GRAYCODE = "graycode"
EXACT = "exact"
COST_MODELS = (GRAYCODE, EXACT)


class CircuitError(ValueError):
    pass


def wrap_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t == -math.pi else t


@dataclass(frozen=True)
class Ry:
    target: int
    theta: float

    def qubits(self):
        return (self.target,)


@dataclass(frozen=True)
class X:
    target: int

    def qubits(self):
        return (self.target,)


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int
    polarity: int = 1  # 0 means the control is negated

    def __post_init__(self):
        if self.control == self.target:
            raise CircuitError("CNOT control equals target")
        if self.polarity not in (0, 1):
            raise CircuitError("CNOT polarity must be 0 or 1")

    def qubits(self):
        return (self.control, self.target)


@dataclass(frozen=True)
class MCRy:
    """Multi-controlled Ry given by a rotation table.

    ``initial`` optionally records the target's state angle before the gate,
    either one float or a tuple indexed by control pattern; the exact
    decomposition only has to match the gate on that input.
    """

    table: "RotationTable"
    target: int
    initial: Union[None, float, tuple] = None

    def __post_init__(self):
        if self.target in self.table.controls:
            raise CircuitError("MCRy target is one of its controls")

    def qubits(self):
        return tuple(self.table.controls) + (self.target,)


Gate = Union[Ry, X, CNOT, MCRy]


@dataclass
class Circuit:
    n: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, g):
        for q in g.qubits():
            if not 1 <= q <= self.n:
                raise CircuitError(f"qubit {q} outside 1..{self.n}")

    def append(self, g) -> "Circuit":
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, gates: Iterable) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count_cx(self) -> int:
        return sum(isinstance(g, CNOT) for g in self.gates)

    def is_basis(self) -> bool:
        return all(isinstance(g, Ry) or (isinstance(g, CNOT) and g.polarity == 1) for g in self.gates)


# --- cost --------------------------------------------------------------------

def gate_cost(g, cost_model: str = EXACT) -> int:
    if isinstance(g, (Ry, X)):
        return 0
    if isinstance(g, CNOT):
        return 1
    if isinstance(g, MCRy):
        from .mcry import exact_cnot_count, graycode_cnot_count
        if cost_model == GRAYCODE:
            return graycode_cnot_count(g.table)
        return exact_cnot_count(g.table, g.initial)
    raise CircuitError(f"unknown gate {g!r}")


def cnot_cost(circuit: Circuit, cost_model: str = EXACT) -> int:
    """CNOT count; MCRy gates are priced by the chosen model on their table as given."""
    if cost_model not in COST_MODELS:
        raise CircuitError(f"unknown cost model {cost_model!r}")
    return sum(gate_cost(g, cost_model) for g in circuit.gates)


# --- transformations ---------------------------------------------------------

def invert(circuit: Circuit) -> Circuit:
    from .mcry import inverse_initial
    out = []
    for g in reversed(circuit.gates):
        if isinstance(g, Ry):
            out.append(Ry(g.target, -g.theta))
        elif isinstance(g, MCRy):
            out.append(MCRy(g.table.negated(), g.target, inverse_initial(g.table, g.initial)))
        else:
            out.append(g)
    return Circuit(circuit.n, out)


def _expand(circuit: Circuit, cost_model: str):
    """Replace MCRy gates by their decompositions, leaving X and negated CNOTs."""
    from .mcry import decompose
    for g in circuit.gates:
        if isinstance(g, MCRy):
            yield from decompose(g.table, g.target, g.initial, cost_model).gates
        else:
            yield g


def lower_to_basis(circuit: Circuit, cost_model: str = EXACT) -> Circuit:
    """Rewrite into Ry and positive CNOTs, exact on the |0...0> input up to sign.

    X is Ry(pi) preceded by Z. Every Z is pushed toward the input (flipping the
    Ry angles it crosses and copying onto CNOT controls) where it acts trivially.
    """
    flat = []
    for g in _expand(circuit, cost_model):
        if isinstance(g, CNOT) and g.polarity == 0:
            flat += [Ry(g.control, math.pi), CNOT(g.control, g.target), Ry(g.control, -math.pi)]
        else:
            flat.append(g)
    pending: set[int] = set()
    out = []
    for g in reversed(flat):
        if isinstance(g, Ry):
            out.append(Ry(g.target, -g.theta if g.target in pending else g.theta))
        elif isinstance(g, X):
            out.append(Ry(g.target, -math.pi if g.target in pending else math.pi))
            pending ^= {g.target}
        else:
            if g.target in pending:
                pending ^= {g.control}
            out.append(g)
    out.reverse()
    return Circuit(circuit.n, out)


# --- serialization -----------------------------------------------------------

def emit_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n}];"]
    for g in circuit.gates:
        if isinstance(g, Ry):
            lines.append(f"ry({g.theta:.17g}) q[{g.target - 1}];")
        elif isinstance(g, CNOT) and g.polarity == 1:
            lines.append(f"cx q[{g.control - 1}],q[{g.target - 1}];")
        else:
            raise CircuitError(f"cannot emit unlowered gate {g!r}; call lower_to_basis first")
    return "\n".join(lines) + "\n"


_QREG = re.compile(r"qreg\s+(\w+)\s*\[\s*(\d+)\s*\]\s*;")
_RY = re.compile(r"ry\s*\(\s*([^)]+)\)\s*\w+\s*\[\s*(\d+)\s*\]\s*;")
_CX = re.compile(r"cx\s+\w+\s*\[\s*(\d+)\s*\]\s*,\s*\w+\s*\[\s*(\d+)\s*\]\s*;")


def _angle(expr: str) -> float:
    expr = expr.strip()
    if not re.fullmatch(r"[0-9eE.+\-*/ ()pi]+", expr):
        raise CircuitError(f"unsupported angle expression {expr!r}")
    return float(eval(expr, {"__builtins__": {}}, {"pi": math.pi}))


def parse_qasm(text: str) -> Circuit:
    """Read the ry/cx subset written by :func:`emit_qasm`."""
    n = None
    gates = []
    for raw in text.splitlines():
        line = raw.split("//", 1)[0].strip()
        if not line or line.startswith(("OPENQASM", "include", "creg", "barrier", "measure")):
            continue
        if m := _QREG.fullmatch(line):
            n = int(m.group(2))
        elif m := _RY.fullmatch(line):
            gates.append(Ry(int(m.group(2)) + 1, _angle(m.group(1))))
        elif m := _CX.fullmatch(line):
            gates.append(CNOT(int(m.group(1)) + 1, int(m.group(2)) + 1))
        else:
            raise CircuitError(f"unsupported QASM line: {raw!r}")
    if n is None:
        raise CircuitError("missing qreg declaration")
    return Circuit(n, gates)


def gate_to_dict(g) -> dict:
    if isinstance(g, Ry):
        return {"op": "ry", "target": g.target, "theta": g.theta}
    if isinstance(g, X):
        return {"op": "x", "target": g.target}
    if isinstance(g, CNOT):
        return {"op": "cx", "control": g.control, "target": g.target, "polarity": g.polarity}
    return {"op": "mcry", "target": g.target, "table": g.table.to_dict(),
            "initial": list(g.initial) if isinstance(g.initial, tuple) else g.initial}


def dumps_json(circuit: Circuit) -> str:
    return json.dumps({"n": circuit.n, "gates": [gate_to_dict(g) for g in circuit.gates]})
