"""Dense real statevector simulation used to verify every produced circuit."""
from __future__ import annotations

import numpy as np

from . import _accel
from .circuit import CNOT, MCRy, Ry, X, Circuit
from .qstate import SparseState

MAX_QUBITS = 24


class SimulationError(ValueError):
    pass


def _apply_mcry(vec, n, g: MCRy):
    table = g.table
    tpos = n - g.target
    cpos = [n - c for c in table.controls]
    idx = np.arange(vec.shape[0])
    lo = idx[((idx >> tpos) & 1) == 0]
    pattern = np.zeros(lo.shape[0], dtype=np.int64)
    for p in cpos:
        pattern = (pattern << 1) | ((lo >> p) & 1)
    theta = np.array(table.filled())[pattern]
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    a, b = vec[lo].copy(), vec[lo + (1 << tpos)].copy()
    vec[lo] = c * a - s * b
    vec[lo + (1 << tpos)] = s * a + c * b


def run(circuit: Circuit, vec: np.ndarray, use_jit=None) -> np.ndarray:
    """Apply the circuit in place to a dense vector and return it."""
    n = circuit.n
    for g in circuit.gates:
        if isinstance(g, Ry):
            _accel.apply_ry(vec, n - g.target, g.theta, use_jit)
        elif isinstance(g, CNOT):
            _accel.apply_cx(vec, n - g.control, n - g.target, g.polarity, use_jit)
        elif isinstance(g, X):
            _accel.apply_x(vec, n - g.target, use_jit)
        elif isinstance(g, MCRy):
            _apply_mcry(vec, n, g)
        else:
            raise SimulationError(f"unknown gate {g!r}")
    return vec


def simulate(circuit: Circuit, n: int | None = None, initial=None, use_jit=None) -> np.ndarray:
    """Statevector after running the circuit on |0...0> (or on ``initial``)."""
    n = circuit.n if n is None else n
    if n != circuit.n:
        raise SimulationError(f"circuit has {circuit.n} qubits, asked to simulate {n}")
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
    if initial is None:
        vec = np.zeros(1 << n)
        vec[0] = 1.0
    else:
        vec = _dense(initial).copy()
    return run(circuit, vec, use_jit)


def _dense(x) -> np.ndarray:
    if isinstance(x, SparseState):
        return x.to_dense()
    return np.asarray(x, dtype=float)


def fidelity(a, b) -> float:
    """|<a|b>| for real states given as SparseState or dense arrays."""
    if isinstance(a, SparseState) and isinstance(b, SparseState):
        if a.n != b.n:
            raise SimulationError("dimension mismatch")
        small, big = (a, b) if a.m <= b.m else (b, a)
        return float(abs(sum(v * big.entries.get(x, 0.0) for x, v in small.entries.items())))
    va, vb = _dense(a), _dense(b)
    if va.shape != vb.shape:
        raise SimulationError("dimension mismatch")
    return float(abs(np.dot(va, vb)))


def verify(circuit: Circuit, target: SparseState, tol: float = 1e-6) -> bool:
    if circuit.n != target.n:
        return False
    return fidelity(simulate(circuit), target) >= 1.0 - tol
