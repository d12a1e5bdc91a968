"""Canonical representatives under zero-CNOT moves.

The moves are: rotating a separable qubit to |0>, X on any qubit, qubit
permutations and global sign. After separable qubits are cleared, the
representative is the minimum over every choice of x0 in the support (all
indices XORed with x0, so x0 lands on 0...0) and every qubit order that
respects a flip-invariant per-qubit signature. That minimum is a true
canonical form whenever the number of admissible orders stays under
``PERM_CAP``; above it a single signature order is used, which stays sound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations, product

import numpy as np

from .circuit import Circuit, Ry, X
from .qstate import AMP_EPS, SparseState, cofactor_index_sets

QUANT = 1e-9
PROP_TOL = 1e-9
PERM_CAP = 5040


# --- sparse single-qubit moves ------------------------------------------------

def apply_x_sparse(state: SparseState, q: int) -> SparseState:
    flip = 1 << (state.n - q)
    return SparseState(state.n, {x ^ flip: a for x, a in state.entries.items()})


def apply_ry_sparse(state: SparseState, q: int, theta: float) -> SparseState:
    pos = 1 << (state.n - q)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    out: dict[int, float] = {}
    seen = set()
    for x in state.entries:
        lo = x & ~pos
        if lo in seen:
            continue
        seen.add(lo)
        a, b = state.entries.get(lo, 0.0), state.entries.get(lo | pos, 0.0)
        na, nb = c * a - s * b, s * a + c * b
        if abs(na) >= AMP_EPS:
            out[lo] = na
        if abs(nb) >= AMP_EPS:
            out[lo | pos] = nb
    return SparseState(state.n, out)


def permute_qubits(state: SparseState, order) -> SparseState:
    """New qubit j+1 is old qubit ``order[j]``."""
    n = state.n
    out = {}
    for x, a in state.entries.items():
        y = 0
        for q in order:
            y = (y << 1) | ((x >> (n - q)) & 1)
        out[y] = a
    return SparseState(n, out)


def separable_angle(state: SparseState, q: int):
    """Ry angle that moves a separable qubit to |0>, 'x' for a qubit fixed at 1, None otherwise."""
    c0, c1 = cofactor_index_sets(state, q)
    if not c1:
        return None
    if not c0:
        return "x"
    if c0 != c1:
        return None
    pos = 1 << (state.n - q)
    e = state.entries
    lows = [x for x in e if not x & pos]
    ref = max(lows, key=lambda x: abs(e[x]))
    r = e[ref | pos] / e[ref]
    for x in lows:
        if abs(e[x | pos] - r * e[x]) > PROP_TOL:
            return None
    return -2.0 * math.atan(r)


def clear_separable(state: SparseState):
    """Rotate every separable qubit to |0>; returns (state, list of gates applied)."""
    gates = []
    changed = True
    while changed:
        changed = False
        for q in range(1, state.n + 1):
            ang = separable_angle(state, q)
            if ang is None:
                continue
            if ang == "x":
                state = apply_x_sparse(state, q)
                gates.append(X(q))
            else:
                state = apply_ry_sparse(state, q, ang)
                gates.append(Ry(q, ang))
            changed = True
    return state, gates


# --- transform -----------------------------------------------------------------

@dataclass(frozen=True)
class Transform:
    """Zero-CNOT moves: ``gates`` (Ry/X, applied first), then ``order``, then ``sign``."""

    n: int
    gates: tuple = ()
    order: tuple = ()
    sign: int = 1

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", tuple(range(1, self.n + 1)))

    @property
    def is_identity(self) -> bool:
        return not self.gates and self.order == tuple(range(1, self.n + 1)) and self.sign == 1

    def circuit(self) -> Circuit:
        return Circuit(self.n, list(self.gates))

    def apply(self, state: SparseState) -> SparseState:
        for g in self.gates:
            state = apply_x_sparse(state, g.target) if isinstance(g, X) else apply_ry_sparse(state, g.target, g.theta)
        state = permute_qubits(state, self.order)
        if self.sign < 0:
            state = SparseState(state.n, {x: -a for x, a in state.entries.items()})
        return state


# --- canonical form ------------------------------------------------------------

def _signatures(idx: np.ndarray, w: np.ndarray, n: int):
    """Per-qubit (min(ones, zeros), min quantized mass) for qubits 1..n."""
    cols = (idx[:, None] >> (n - np.arange(1, n + 1))) & 1  # (entry, qubit)
    ones = cols.sum(axis=0)
    mass1 = w @ cols
    mass0 = w.sum() - mass1
    q1, q0 = np.rint(mass1 / QUANT).astype(np.int64), np.rint(mass0 / QUANT).astype(np.int64)
    return [(int(min(o, len(idx) - o)), int(min(a, b))) for o, a, b in zip(ones, q0, q1)]


def _orders(state: SparseState, idx, w):
    n = state.n
    sigs = _signatures(idx, w, n)
    classes = {}
    for q in range(1, n + 1):
        classes.setdefault(sigs[q - 1], []).append(q)
    groups = [classes[k] for k in sorted(classes)]
    total = 1
    for g in groups:
        total *= math.factorial(len(g))
    if total > PERM_CAP:
        return [tuple(q for g in groups for q in g)]
    return [tuple(q for part in combo for q in part) for combo in product(*(permutations(g) for g in groups))]


def _best(state: SparseState):
    """(key tuple, x0, order, sign) minimizing the representative encoding."""
    n = state.n
    items = state.items()
    idx = np.array([x for x, _ in items], dtype=np.int64)
    amp = np.array([a for _, a in items])
    orders = np.array(_orders(state, idx, amp * amp), dtype=np.int64)  # (P, n)
    xored = idx[None, :] ^ idx[:, None]  # (x0, entry)
    bits = (xored[..., None] >> (n - np.arange(1, n + 1))) & 1  # (x0, entry, qubit)
    weights = 1 << (n - 1 - np.arange(n))
    # gather qubit columns per order, then weight
    cols = bits[:, :, orders - 1]  # (x0, entry, P, n)
    new = (cols * weights).sum(axis=-1).transpose(2, 0, 1)  # (P, x0, entry)
    P, M, _ = new.shape
    flat = new.reshape(P * M, -1)
    srt = np.sort(flat, axis=1)
    order_rows = np.lexsort(srt.T[::-1])
    first = srt[order_rows[0]]
    ties = order_rows[(srt[order_rows] == first).all(axis=1)]
    # among index-equal candidates, smallest sign-normalized amplitude vector
    perms = np.argsort(flat[ties], axis=1, kind="stable")
    vals = np.rint(amp[perms] / QUANT).astype(np.int64)
    signs = np.where(amp[perms[:, 0]] > 0, 1, -1)
    vals *= signs[:, None]
    pick = np.lexsort(vals.T[::-1])[0]
    p, a0 = divmod(int(ties[pick]), M)
    best = (tuple(int(v) for v in vals[pick]), int(idx[a0]), tuple(int(v) for v in orders[p]), int(signs[pick]))
    return tuple(int(v) for v in first), best


def _x0_gates(x0: int, n: int):
    return tuple(X(q) for q in range(1, n + 1) if (x0 >> (n - q)) & 1)


def canonicalize(state: SparseState):
    """(representative, transform) with ``transform.apply(state) == representative``."""
    cleared, gates = clear_separable(state)
    _, (_, x0, order, sign) = _best(cleared)
    transform = Transform(state.n, tuple(gates) + _x0_gates(x0, state.n), order, sign)
    rep = transform.apply(state)
    if rep.support == state.support and all(abs(rep.entries[x] - a) <= QUANT for x, a in state.entries.items()):
        return state, Transform(state.n)
    return rep, transform


def encode_key(n: int, idx, amps) -> bytes:
    """Totally ordered bytes: n, m, sorted indices, quantized amplitudes."""
    parts = [n.to_bytes(1, "big"), len(idx).to_bytes(4, "big")]
    width = max(1, (n + 7) // 8)
    parts += [int(x).to_bytes(width, "big") for x in idx]
    # offset-binary so byte order matches numeric order
    parts += [(int(a) + (1 << 63)).to_bytes(8, "big") for a in amps]
    return b"".join(parts)


def canonical_key(state: SparseState) -> bytes:
    return _canonical_key(state.n, tuple(state.items()))


@lru_cache(maxsize=500_000)
def _canonical_key(n: int, items: tuple) -> bytes:
    cleared, _ = clear_separable(SparseState(n, dict(items)))
    idx_key, (amps, _, _, _) = _best(cleared)
    return encode_key(n, idx_key, amps)


def raw_key(state: SparseState) -> bytes:
    """Key of the state itself up to global sign, without any canonicalization."""
    items = state.items()
    sign = 1 if items[0][1] > 0 else -1
    return encode_key(state.n, [x for x, _ in items], [round(sign * a / QUANT) for _, a in items])


def count_canonical_uniform(n: int, m: int) -> int:
    """Distinct canonical classes of uniform m-index states that keep cardinality m."""
    if n > 5:
        raise ValueError("enumeration limited to n <= 5")
    if not 1 <= m <= 1 << n:
        raise ValueError("need 1 <= m <= 2^n")
    keys = set()
    amp = 1.0 / math.sqrt(m)
    for subset in combinations(range(1 << n), m):
        state = SparseState(n, {x: amp for x in subset})
        cleared, _ = clear_separable(state)
        if cleared.m != m:
            continue
        keys.add(canonical_key(cleared))
    return len(keys)
