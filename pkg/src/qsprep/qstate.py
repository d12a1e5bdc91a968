"""Sparse real-amplitude quantum states.

Basis indices are plain ints. Qubit 1 is the most significant bit, so for an
n-qubit state qubit ``q`` (1-based) lives at bit position ``n - q``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

AMP_EPS = 1e-10
NORM_TOL = 1e-9


class StateError(ValueError):
    pass


def bit(x: int, q: int, n: int) -> int:
    """Value of qubit ``q`` (1-based, MSB first) in basis index ``x``."""
    return (x >> (n - q)) & 1


def to_bits(x: int, n: int) -> str:
    return format(x, f"0{n}b") if n else ""


@dataclass(frozen=True)
class SparseState:
    n: int
    entries: Mapping[int, float] = field(hash=False)

    def __post_init__(self):
        if self.n < 0:
            raise StateError("negative qubit count")
        if not self.entries:
            raise StateError("degenerate state")
        limit = 1 << self.n
        for x in self.entries:
            if not 0 <= x < limit:
                raise StateError(f"basis index {x} does not fit in {self.n} qubits")

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.entries)

    def items(self):
        return sorted(self.entries.items())

    def norm2(self) -> float:
        return sum(a * a for a in self.entries.values())

    def to_dense(self) -> np.ndarray:
        v = np.zeros(1 << self.n)
        for x, a in self.entries.items():
            v[x] = a
        return v

    @classmethod
    def from_dense(cls, vec, eps: float = AMP_EPS) -> "SparseState":
        vec = np.asarray(vec, dtype=float)
        n = int(round(math.log2(len(vec))))
        if 1 << n != len(vec):
            raise StateError("dense vector length is not a power of two")
        return cls(n, {int(i): float(vec[i]) for i in np.flatnonzero(np.abs(vec) >= eps)})

    @classmethod
    def from_bits(cls, mapping: Mapping[str, float]) -> "SparseState":
        widths = {len(b) for b in mapping}
        if len(widths) != 1:
            raise StateError("basis bitstrings have inconsistent widths")
        n = widths.pop()
        return cls(n, {int(b, 2) if b else 0: float(a) for b, a in mapping.items()})

    def to_bits(self) -> dict[str, float]:
        return {to_bits(x, self.n): a for x, a in self.items()}

    def __repr__(self):
        body = ", ".join(f"{to_bits(x, self.n)}:{a:.6g}" for x, a in self.items())
        return f"SparseState(n={self.n}, {{{body}}})"


def normalize(state: SparseState, eps: float = AMP_EPS) -> SparseState:
    kept = {x: a for x, a in state.entries.items() if abs(a) >= eps}
    norm = math.sqrt(sum(a * a for a in kept.values()))
    if not kept or norm == 0.0:
        raise StateError("degenerate state")
    return SparseState(state.n, {x: a / norm for x, a in kept.items()})


def make_state(n: int, entries: Mapping[int, float] | Iterable[int]) -> SparseState:
    """Build a normalized state; an iterable of indices gives a uniform state."""
    if not isinstance(entries, Mapping):
        entries = {int(x): 1.0 for x in entries}
    if not entries:
        raise StateError("degenerate state")
    return normalize(SparseState(n, dict(entries)))


def ground_state(n: int) -> SparseState:
    return SparseState(n, {0: 1.0})


def is_normalized(state: SparseState, tol: float = NORM_TOL) -> bool:
    return abs(state.norm2() - 1.0) <= tol


def cofactor_index_sets(state: SparseState, qubit: int) -> tuple[frozenset[int], frozenset[int]]:
    """Index sets of the qubit=0 and qubit=1 cofactors, projected onto the other n-1 qubits."""
    n = state.n
    if not 1 <= qubit <= n:
        raise StateError(f"qubit {qubit} out of range 1..{n}")
    pos = n - qubit
    low = (1 << pos) - 1
    sides: tuple[set[int], set[int]] = (set(), set())
    for x in state.entries:
        proj = ((x >> (pos + 1)) << pos) | (x & low)
        sides[(x >> pos) & 1].add(proj)
    return frozenset(sides[0]), frozenset(sides[1])


def entangled_qubits(state: SparseState) -> list[int]:
    out = []
    for q in range(1, state.n + 1):
        c0, c1 = cofactor_index_sets(state, q)
        if c0 and c1 and c0 != c1:
            out.append(q)
    return out


def entangled_qubit_count(state: SparseState) -> int:
    return len(entangled_qubits(state))


def make_dicke(n: int, k: int) -> SparseState:
    if not 0 < k < n:
        raise StateError("Dicke state needs 0 < k < n")
    idx = [sum(1 << (n - 1 - i) for i in c) for c in combinations(range(n), k)]
    return make_state(n, idx)


def make_ghz(n: int) -> SparseState:
    if n < 2:
        raise StateError("GHZ state needs n >= 2")
    return make_state(n, [0, (1 << n) - 1])


def make_w(n: int) -> SparseState:
    if n < 2:
        raise StateError("W state needs n >= 2")
    return make_dicke(n, 1)


def random_state(n: int, m: int, seed=None) -> SparseState:
    """m distinct indices drawn uniformly, amplitudes uniform in (0, 1] then normalized."""
    if not 1 <= m <= (1 << n):
        raise StateError(f"cardinality {m} impossible for {n} qubits")
    rng = np.random.default_rng(seed)
    idx = rng.choice(1 << n, size=m, replace=False)
    amps = 1.0 - rng.random(m)
    return make_state(n, {int(x): float(a) for x, a in zip(idx, amps)})


def states_equal(a: SparseState, b: SparseState, tol: float = 1e-9) -> bool:
    """Equality up to global sign."""
    if a.n != b.n or a.support != b.support:
        return False
    for sign in (1.0, -1.0):
        if all(abs(a.entries[x] - sign * b.entries[x]) <= tol for x in a.entries):
            return True
    return False


# --- file formats -----------------------------------------------------------

def dumps_json(state: SparseState) -> str:
    body = [{"basis": to_bits(x, state.n), "amp": a} for x, a in state.items()]
    return json.dumps({"n": state.n, "entries": body}, indent=1)


def dumps_text(state: SparseState) -> str:
    return "".join(f"{to_bits(x, state.n)} {a!r}\n" for x, a in state.items())


def loads(text: str, normalize_input: bool = True) -> SparseState:
    """Parse either the JSON or the plain-text state format."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        n = int(doc["n"])
        entries: dict[int, float] = {}
        for e in doc["entries"]:
            b = e["basis"]
            if len(b) != n:
                raise StateError(f"basis {b!r} does not have width {n}")
            entries[int(b, 2) if b else 0] = entries.get(int(b, 2) if b else 0, 0.0) + float(e["amp"])
        state = SparseState(n, entries)
    else:
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or set(parts[0]) - {"0", "1"}:
                raise StateError(f"line {lineno}: expected '<bitstring> <float>'")
            pairs[parts[0]] = pairs.get(parts[0], 0.0) + float(parts[1])
        if not pairs:
            raise StateError("degenerate state")
        state = SparseState.from_bits(pairs)
    return normalize(state) if normalize_input else state


def load(path) -> SparseState:
    with open(path) as fh:
        return loads(fh.read())


def save(state: SparseState, path, fmt: str | None = None) -> None:
    fmt = fmt or ("json" if str(path).endswith(".json") else "text")
    with open(path, "w") as fh:
        fh.write(dumps_json(state) if fmt == "json" else dumps_text(state))
