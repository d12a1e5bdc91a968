"""Rotation tables and multi-controlled Ry decomposition.

Two decompositions are provided. The Gray-code template always uses 2^c
CNOTs. The exact engine searches CNOT counts K = 0, 1, ... over control
sequences and solves the resulting linear equality system, exploiting
don't-care patterns and (optionally) a known input angle on the target.

Angles in this module are *state angles*: a target pair (cos(p/2), sin(p/2)).
Ry(t) maps p to p + t, a CNOT whose control fires maps p to pi - p.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence, Union

import numpy as np

from . import _accel
from .circuit import CNOT, EXACT, GRAYCODE, Circuit, Ry, X

FOUR_PI = 4.0 * math.pi
ANGLE_TOL = 1e-9
SOLVE_TOL = 1e-8
# total equality systems tried before the exact engine gives up and uses Gray code
DEFAULT_SOLVE_BUDGET = 200_000


class _DontCare:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "X"

    def __reduce__(self):
        return (_DontCare, ())


DONT_CARE = _DontCare()


class DecompositionError(RuntimeError):
    pass


def same_angle(a: float, b: float, tol: float = ANGLE_TOL) -> bool:
    """Equal as rotations, i.e. modulo 4*pi."""
    return abs(math.remainder(a - b, FOUR_PI)) <= tol


@dataclass(frozen=True)
class RotationTable:
    """Angles indexed by control pattern; ``controls[0]`` is the pattern's MSB."""

    controls: tuple
    angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "angles", tuple(a if a is DONT_CARE else float(a) for a in self.angles))
        if len(set(self.controls)) != len(self.controls):
            raise ValueError("repeated control qubit")
        if len(self.angles) != 1 << len(self.controls):
            raise ValueError(f"{len(self.controls)} controls need {1 << len(self.controls)} entries")
        if all(a is DONT_CARE for a in self.angles):
            raise ValueError("rotation table has no care entries")

    @property
    def c(self) -> int:
        return len(self.controls)

    @classmethod
    def from_mapping(cls, controls: Sequence[int], entries: Mapping) -> "RotationTable":
        """Build from {"01": angle or "X"}; missing patterns are don't-cares."""
        c = len(controls)
        angles = [DONT_CARE] * (1 << c)
        for key, val in entries.items():
            p = int(key, 2) if isinstance(key, str) and key else int(key or 0)
            if isinstance(key, str) and len(key) != c:
                raise ValueError(f"pattern {key!r} does not have {c} bits")
            angles[p] = DONT_CARE if (val is DONT_CARE or val == "X" or val is None) else float(val)
        return cls(tuple(controls), tuple(angles))

    @classmethod
    def constant(cls, theta: float) -> "RotationTable":
        return cls((), (theta,))

    def to_dict(self) -> dict:
        fmt = lambda p: format(p, f"0{self.c}b") if self.c else ""
        return {"controls": list(self.controls),
                "entries": {fmt(p): ("X" if a is DONT_CARE else a) for p, a in enumerate(self.angles)}}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RotationTable":
        return cls.from_mapping(doc.get("controls", []), doc["entries"])

    def care(self) -> list[tuple[int, float]]:
        return [(p, a) for p, a in enumerate(self.angles) if a is not DONT_CARE]

    def filled(self, value: float = 0.0) -> tuple:
        return tuple(value if a is DONT_CARE else a for a in self.angles)

    def negated(self) -> "RotationTable":
        return RotationTable(self.controls, tuple(a if a is DONT_CARE else -a for a in self.angles))

    def pattern_bits(self, p: int) -> tuple:
        return tuple((p >> (self.c - 1 - i)) & 1 for i in range(self.c))


Initial = Union[None, float, Sequence[float]]


def _initial_vector(table: RotationTable, initial: Initial):
    if initial is None:
        return None
    if isinstance(initial, (int, float)):
        return (float(initial),) * len(table.angles)
    vec = tuple(float(v) for v in initial)
    if len(vec) != len(table.angles):
        raise ValueError("per-pattern initial angles do not match the table size")
    return vec


def inverse_initial(table: RotationTable, initial: Initial):
    """Input angles of the inverse gate: the outputs of the forward one."""
    vec = _initial_vector(table, initial)
    if vec is None:
        return None
    return tuple(v + (0.0 if a is DONT_CARE else a) for v, a in zip(vec, table.angles))


# --- support reduction --------------------------------------------------------

def _drop_control(table, init, i):
    """Try removing control position i; returns (table, init) or None."""
    c = table.c
    shift = c - 1 - i
    high_mask = ~((1 << (shift + 1)) - 1)
    angles, inits = [], []
    for r in range(1 << (c - 1)):
        base = ((r << 1) & high_mask) | (r & ((1 << shift) - 1))
        members = (base, base | (1 << shift))
        cares = [p for p in members if table.angles[p] is not DONT_CARE]
        for p in cares[1:]:
            if not same_angle(table.angles[p], table.angles[cares[0]]):
                return None
            if init is not None and not same_angle(init[p], init[cares[0]]):
                return None
        pick = cares[0] if cares else members[0]
        angles.append(table.angles[pick])
        if init is not None:
            inits.append(init[pick])
    controls = table.controls[:i] + table.controls[i + 1:]
    return RotationTable(controls, tuple(angles)), (tuple(inits) if init is not None else None)


def _reduce(table: RotationTable, init):
    changed = True
    while changed:
        changed = False
        for i in range(table.c):
            res = _drop_control(table, init, i)
            if res is not None:
                table, init = res
                changed = True
                break
    return table, init


def reduce_support(table: RotationTable) -> RotationTable:
    """Drop every control the rotation does not depend on (don't-cares are free)."""
    return _reduce(table, None)[0]


# --- Gray-code template -------------------------------------------------------

def gray_sequence(c: int) -> list[int]:
    """Control positions flipped along the cyclic Gray code, 2^c entries."""
    if c == 0:
        return []
    seq = []
    for i in range(1 << c):
        g0 = i ^ (i >> 1)
        j = (i + 1) % (1 << c)
        g1 = j ^ (j >> 1)
        seq.append(c - (g0 ^ g1).bit_length())
    return seq


def _default_target(table: RotationTable) -> int:
    return max(table.controls, default=0) + 1


def _walsh(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform in natural order."""
    h = 1
    while h < v.size:
        v = v.reshape(-1, 2, h)
        v = np.stack((v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]), axis=1).reshape(-1)
        h *= 2
    return v


def gray_code_decompose(table: RotationTable, target: int | None = None) -> Circuit:
    """2^c CNOTs along the Gray code with 2^c Ry angles; don't-cares are set to 0.

    The result implements the table as a unitary, for every input.
    """
    target = _default_target(table) if target is None else target
    n = max(max(table.controls, default=0), target)
    c = table.c
    if c == 0:
        return Circuit(n, [Ry(target, table.filled()[0])])
    seq = gray_sequence(c)
    # Ry k sees the sign (-1)^(x . M_k), M_k = XOR of the controls flipped after it;
    # the M_k are the 2^c distinct Walsh masks, so the system inverts by a transform
    masks = [0] * len(seq)
    acc = 0
    for k in range(len(seq) - 1, -1, -1):
        acc ^= 1 << (c - 1 - seq[k])
        masks[k] = acc
    theta = _walsh(np.array(table.filled(), dtype=float))[masks] / (1 << c)
    gates = []
    for k, s in enumerate(seq):
        gates.append(Ry(target, float(theta[k])))
        gates.append(CNOT(table.controls[s], target))
    return Circuit(n, gates)


def graycode_cnot_count(table: RotationTable) -> int:
    return 0 if table.c == 0 else 1 << table.c


# --- exact engine --------------------------------------------------------------

@dataclass(frozen=True)
class EqualitySystem:
    """Equations A @ theta == rhs (mod 4pi, up to one common 2pi shift).

    Rows follow the care patterns; ``seq`` holds control positions and
    ``final_x`` appends an X on the target.
    """

    K: int
    seq: tuple
    final_x: bool
    patterns: tuple
    A: np.ndarray
    rhs: np.ndarray
    consistent: bool = True

    @property
    def signs(self) -> np.ndarray:
        """R[x, k] = -1 when the k-th CNOT fires on care pattern x."""
        bits = np.array([[(p >> (self._c - 1 - s)) & 1 for s in self.seq] for p in self.patterns])
        return 1 - 2 * bits.reshape(len(self.patterns), self.K)

    _c: int = 0


def _care_arrays(table: RotationTable, init):
    care = table.care()
    bits = np.array([table.pattern_bits(p) for p, _ in care], dtype=np.int64).reshape(len(care), table.c)
    if init is None:
        phi_in = np.zeros(len(care))
        phi_out = np.array([a for _, a in care])
    else:
        phi_in = np.array([init[p] for p, _ in care])
        phi_out = np.array([init[p] + a for p, a in care])
    return care, bits, phi_in, phi_out


def build_equality_system(table: RotationTable, controls_seq: Sequence[int],
                          initial_angle: Initial = 0.0, final_x: bool = False) -> EqualitySystem:
    """System for Ry(t0) CX(s1) Ry(t1) ... CX(sK) Ry(tK) [X] realizing the table.

    ``controls_seq`` lists control qubits. With ``initial_angle`` None the
    system asks for the table as a unitary.
    """
    init = _initial_vector(table, initial_angle)
    care, bits, phi_in, phi_out = _care_arrays(table, init)
    pos = np.array([table.controls.index(q) for q in controls_seq], dtype=np.int64)
    A, rhs, ok = _accel.build_system(bits, phi_in, phi_out, pos, final_x, init is not None)
    return EqualitySystem(len(pos), tuple(int(s) for s in pos), final_x,
                          tuple(p for p, _ in care), A, rhs, bool(ok), table.c)


def solve_system(system: EqualitySystem, tol: float = SOLVE_TOL):
    """Angles theta_0..theta_K solving the system, or None when infeasible."""
    if not system.consistent:
        return None
    B, e = _accel.global_sign_system(system.A, system.rhs)
    ok, theta = _accel.solve_mod(B, e, FOUR_PI, tol)
    return [float(t) for t in theta] if ok else None


def _sequence_count(c: int, K: int) -> int:
    if K == 0:
        return 1
    return c * (c - 1) ** (K - 1)


def _qkey(values) -> tuple:
    return tuple(round(v % FOUR_PI, 9) for v in values)


@lru_cache(maxsize=200_000)
def _search_cached(c: int, bits: tuple, qin: tuple, qout: tuple, budget: int):
    # returns (seq, final_x) of the first feasible template, or None past the budget
    m = len(qin)
    b = np.array(bits, dtype=np.int64).reshape(m, c)
    phi_in, phi_out = np.array(qin), np.array(qout)
    spent = 0
    k_max = 0 if c == 0 else (1 << c)
    for K in range(k_max + 1):
        spent += _sequence_count(c, K)
        if spent > budget:
            return None
        found, seq, fx, _ = _accel.first_feasible(b, phi_in, phi_out, K, True, SOLVE_TOL)
        if found:
            return tuple(int(s) for s in seq), bool(fx)
    return None


def _solve_known(table: RotationTable, init, budget: int):
    care, bits, phi_in, phi_out = _care_arrays(table, init)
    key_bits = tuple(int(v) for v in bits.ravel())
    hit = _search_cached(table.c, key_bits, _qkey(phi_in), _qkey(phi_out), budget)
    if hit is None:
        return None
    seq, fx = hit
    # re-solve on the unrounded angles
    A, rhs, ok = _accel.build_system(bits, phi_in, phi_out, np.array(seq, dtype=np.int64), fx, True)
    B, e = _accel.global_sign_system(A, rhs)
    good, theta = _accel.solve_mod(B, e, FOUR_PI, SOLVE_TOL)
    if not good:  # pragma: no cover - only at the quantization boundary
        found, seq_a, fx, theta = _accel.first_feasible(bits, phi_in, phi_out, len(seq), True, SOLVE_TOL)
        if not found:
            return None
        seq = tuple(int(s) for s in seq_a)
    return seq, bool(fx), tuple(float(t) for t in theta)


def _pair_check(table: RotationTable, init, circuit_gates, target) -> bool:
    """Per-pattern 2-vector simulation of the decomposition on the care inputs."""
    ref = None
    pos = {q: i for i, q in enumerate(table.controls)}
    for p, a in table.care():
        bits = table.pattern_bits(p)
        phi = 0.0 if init is None else init[p]
        v = np.array([math.cos(phi / 2), math.sin(phi / 2)])
        for g in circuit_gates:
            if isinstance(g, Ry):
                cs, sn = math.cos(g.theta / 2), math.sin(g.theta / 2)
                v = np.array([cs * v[0] - sn * v[1], sn * v[0] + cs * v[1]])
            elif isinstance(g, X) or (isinstance(g, CNOT) and bits[pos[g.control]] == g.polarity):
                v = v[::-1].copy()
        want = np.array([math.cos((phi + a) / 2), math.sin((phi + a) / 2)])
        dot = float(v @ want)
        if ref is None:
            ref = 1.0 if dot >= 0 else -1.0
        if np.abs(v - ref * want).max() > 1e-7:
            return False
    return True


def _wrap2(t: float) -> float:
    # into (-2pi, 2pi]: same rotation, smallest printed magnitude
    r = math.remainder(t, FOUR_PI)
    return FOUR_PI / 2 if r == -FOUR_PI / 2 else r


def exact_decompose(table: RotationTable, initial_angle: Initial = 0.0, target: int | None = None,
                    budget: int = DEFAULT_SOLVE_BUDGET) -> Circuit:
    """Fewest-CNOT realization of the table on the given target input.

    ``initial_angle`` is the target's state angle before the gate, one value or
    one per pattern. ``None`` means the input is unknown and the Gray-code
    template (on the support-reduced table) is used instead. The result is
    checked pattern by pattern before it is returned.
    """
    target = _default_target(table) if target is None else target
    n = max(max(table.controls, default=0), target)
    init = _initial_vector(table, initial_angle)
    red, rinit = _reduce(table, init)
    if init is None:
        return Circuit(n, gray_code_decompose(red, target).gates)
    sol = _solve_known(red, rinit, budget)
    if sol is None:
        gates = gray_code_decompose(red, target).gates
    else:
        seq, fx, theta = sol
        gates = []
        ctrl = [red.controls[s] for s in seq]
        for k, t in enumerate(theta):
            if k:
                gates.append(CNOT(ctrl[k - 1], target))
            t = _wrap2(t)
            if abs(t) > 1e-12:
                gates.append(Ry(target, t))
        if fx:
            gates.append(X(target))
    if not _pair_check(table, init, gates, target):
        raise DecompositionError(f"decomposition failed verification for {table}")
    return Circuit(n, gates)


def decompose(table: RotationTable, target: int, initial: Initial = None, cost_model: str = EXACT) -> Circuit:
    if cost_model == GRAYCODE:
        return gray_code_decompose(table, target)
    return exact_decompose(table, initial, target)


def exact_cnot_count(table: RotationTable, initial: Initial = 0.0,
                     budget: int = DEFAULT_SOLVE_BUDGET) -> int:
    """CNOT count of :func:`exact_decompose` without building the circuit."""
    return _exact_count(table, _initial_vector(table, initial), budget)


@lru_cache(maxsize=500_000)
def _exact_count(table: RotationTable, init, budget: int) -> int:
    red, rinit = _reduce(table, init)
    if init is None:
        return graycode_cnot_count(red)
    care, bits, phi_in, phi_out = _care_arrays(red, rinit)
    hit = _search_cached(red.c, tuple(int(v) for v in bits.ravel()), _qkey(phi_in), _qkey(phi_out), budget)
    return graycode_cnot_count(red) if hit is None else len(hit[0])


def mcry_cnot_cost(table: RotationTable, cost_model: str = EXACT, initial: Initial = 0.0) -> int:
    """CNOT cost after support reduction; exact needs a known input, else Gray code."""
    if cost_model == GRAYCODE or initial is None:
        return graycode_cnot_count(reduce_support(table))
    return exact_cnot_count(table, initial)


def clear_cache() -> None:
    _search_cached.cache_clear()
    _exact_count.cache_clear()
