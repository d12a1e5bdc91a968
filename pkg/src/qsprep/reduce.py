"""Divide-and-conquer preparation flows.

* n-flow: fix one qubit per step with a multi-controlled Ry.
* m-flow: merge two indices per step (CNOT alignment plus one controlled Ry).
* hybrid: reduce until the state fits the exact search, then run A*.

Every step is recorded in the target-to-ground direction; the returned
circuits are the inverses, which prepare the state from |0...0>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import mcry
from .canon import apply_x_sparse, clear_separable
from .circuit import CNOT, EXACT, GRAYCODE, Circuit, MCRy, X, cnot_cost, invert
from .qstate import SparseState, cofactor_index_sets, entangled_qubit_count
from .search import BudgetExceeded, CapExceeded, SearchConfig, astar_search
from .sim import MAX_QUBITS, verify


class ReductionError(ValueError):
    pass


@dataclass
class ReductionStep:
    gates: list  # target-to-ground direction
    state: SparseState
    cost: int


def _apply_gate_sparse(state: SparseState, g) -> SparseState:
    n = state.n
    if isinstance(g, X):
        return apply_x_sparse(state, g.target)
    if isinstance(g, CNOT):
        cbit, tbit = 1 << (n - g.control), 1 << (n - g.target)
        return SparseState(n, {(x ^ tbit) if bool(x & cbit) == bool(g.polarity) else x: a
                               for x, a in state.entries.items()})
    raise ReductionError(f"unsupported gate {g!r}")


def _active_controls(state: SparseState, target: int):
    """Other qubits that take both values on the support."""
    out = []
    for q in range(1, state.n + 1):
        if q == target:
            continue
        c0, c1 = cofactor_index_sets(state, q)
        if c0 and c1:
            out.append(q)
    return tuple(out)


def _pattern_of(x: int, n: int, controls) -> int:
    p = 0
    for q in controls:
        p = (p << 1) | ((x >> (n - q)) & 1)
    return p


def _fix_table(state: SparseState, qubit: int, controls, merge_to=None):
    """Rotation table (and per-pattern input angles) sending ``qubit`` to a basis value."""
    n = state.n
    pos = 1 << (n - qubit)
    angles = [mcry.DONT_CARE] * (1 << len(controls))
    initial = [0.0] * (1 << len(controls))
    pairs: dict[int, list] = {}
    for x, a in state.entries.items():
        pairs.setdefault(_pattern_of(x, n, controls), [0.0, 0.0])[1 if x & pos else 0] += a
    for p, (a0, a1) in pairs.items():
        phi = 2.0 * math.atan2(a1, a0)
        initial[p] = phi
        angles[p] = -phi
    return mcry.RotationTable(controls, tuple(angles)), tuple(initial)


def _apply_table(state: SparseState, table: mcry.RotationTable, qubit: int) -> SparseState:
    n = state.n
    pos = 1 << (n - qubit)
    out: dict[int, float] = {}
    seen = set()
    filled = table.filled()
    for x in state.entries:
        lo = x & ~pos
        if lo in seen:
            continue
        seen.add(lo)
        theta = filled[_pattern_of(lo, n, table.controls)]
        a, b = state.entries.get(lo, 0.0), state.entries.get(lo | pos, 0.0)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        na, nb = c * a - s * b, s * a + c * b
        if abs(na) >= 1e-10:
            out[lo] = na
        if abs(nb) >= 1e-10:
            out[lo | pos] = nb
    return SparseState(n, out)


# --- qubit reduction -----------------------------------------------------------

def qubit_reduce_step(state: SparseState, qubit: int, cost_model: str = GRAYCODE) -> ReductionStep:
    """Rotate ``qubit`` to |0> for every pattern of the other active qubits."""
    c0, c1 = cofactor_index_sets(state, qubit)
    if not c1:
        raise ReductionError(f"qubit {qubit} is already fixed at 0")
    controls = _active_controls(state, qubit)
    table, initial = _fix_table(state, qubit, controls)
    gate = MCRy(table, qubit, initial)
    new = _apply_table(state, table, qubit)
    return ReductionStep([gate], new, cnot_cost(Circuit(state.n, [gate]), cost_model))


def _finish(state: SparseState, steps, n):
    down = []
    for st in steps:
        down.extend(st.gates)
    (x,) = state.entries
    down.extend(X(q) for q in range(1, n + 1) if (x >> (n - q)) & 1)
    return invert(Circuit(n, down))


def _check(circuit: Circuit, target: SparseState, cost_model: str):
    if target.n <= MAX_QUBITS:
        from .circuit import lower_to_basis
        if not verify(lower_to_basis(circuit, cost_model), target):
            raise ReductionError("produced circuit failed verification")


def prepare_nflow(state: SparseState, cost_model: str = GRAYCODE, order=None, check: bool = True) -> Circuit:
    """Qubit reduction from the last qubit to the first (or the given order)."""
    order = list(range(state.n, 0, -1)) if order is None else list(order)
    steps = []
    cur = state
    for q in order:
        if not cofactor_index_sets(cur, q)[1]:
            continue
        st = qubit_reduce_step(cur, q, cost_model)
        steps.append(st)
        cur = st.state
    circuit = _finish(cur, steps, state.n)
    if check:
        _check(circuit, state, cost_model)
    return circuit


# --- cardinality reduction -----------------------------------------------------

def _bitval(x: int, q: int, n: int) -> int:
    return (x >> (n - q)) & 1


def _narrow(indices: set, n: int, conditions: dict):
    """Add the (qubit, value) condition keeping the most indices while splitting them."""
    best = None
    for q in range(1, n + 1):
        if q in conditions:
            continue
        ones = sum(_bitval(x, q, n) for x in indices)
        for v, size in ((1, ones), (0, len(indices) - ones)):
            if 0 < size < len(indices):
                # larger subset first, then value 1, then the lower qubit
                rank = (size, v, -q)
                if best is None or rank > best[0]:
                    best = (rank, q, v)
    _, q, v = best
    conditions[q] = v
    return {x for x in indices if _bitval(x, q, n) == v}, q


def _matches(x: int, n: int, conditions: dict) -> bool:
    return all(_bitval(x, q, n) == v for q, v in conditions.items())


def cardinality_reduce_step(state: SparseState) -> ReductionStep:
    """Merge two indices, lowering the cardinality by one."""
    if state.m < 2:
        raise ReductionError("cardinality is already 1")
    n = state.n
    conditions: dict[int, int] = {}
    pool = set(state.entries)
    dif = None
    while len(pool) > 1:
        pool, dif = _narrow(pool, n, conditions)
    (x1,) = pool
    del conditions[dif]
    cands = {x for x in state.entries if x != x1 and _matches(x, n, conditions)}
    while len(cands) > 1:
        cands, _ = _narrow(cands, n, conditions)
    (x2,) = cands

    gates = []
    cur = state
    side = _bitval(x1, dif, n)
    for q in range(1, n + 1):
        if q != dif and _bitval(x1, q, n) != _bitval(x2, q, n):
            g = CNOT(dif, q, side)
            gates.append(g)
            cur = _apply_gate_sparse(cur, g)
    x1 = x1 ^ sum(1 << (n - q) for q in range(1, n + 1)
                  if q != dif and _bitval(x1, q, n) != _bitval(x2, q, n))

    # greedily drop conditions while the pair stays isolated
    def isolated(conds):
        return all(x in (x1, x2) for x in cur.entries if _matches(x, n, {q: v for q, v in conds.items() if q != dif}))

    ctrl = dict(conditions)
    for q in sorted(ctrl):
        trial = {k: v for k, v in ctrl.items() if k != q}
        if isolated(trial):
            ctrl = trial
    controls = tuple(sorted(ctrl))
    pos = 1 << (n - dif)
    lo = x1 & ~pos
    a0, a1 = cur.entries.get(lo, 0.0), cur.entries.get(lo | pos, 0.0)
    r = math.hypot(a0, a1)
    keep = cur.entries[x1]
    phi_in = 2.0 * math.atan2(a1, a0)
    if side == 0:
        phi_out = 0.0 if keep > 0 else 2 * math.pi
    else:
        phi_out = math.pi if keep > 0 else -math.pi
    theta = phi_out - phi_in
    angles = [0.0] * (1 << len(controls))
    angles[_pattern_of(lo, n, controls)] = theta
    table = mcry.RotationTable(controls, tuple(angles))
    # other patterns may hold several inputs, so the gate must act as a unitary
    gate = MCRy(table, dif, None)
    gates.append(gate)
    new = dict(cur.entries)
    new.pop(lo, None)
    new.pop(lo | pos, None)
    new[x1] = math.copysign(r, keep)
    cost = sum(isinstance(g, CNOT) for g in gates) + mcry.graycode_cnot_count(table)
    return ReductionStep(gates, SparseState(n, new), cost)


def prepare_mflow(state: SparseState, check: bool = True) -> Circuit:
    steps = []
    cur = state
    while cur.m > 1:
        st = cardinality_reduce_step(cur)
        steps.append(st)
        cur = st.state
    circuit = _finish(cur, steps, state.n)
    if check:
        _check(circuit, state, GRAYCODE)
    return circuit


# --- hybrid ---------------------------------------------------------------------

@dataclass(frozen=True)
class HybridConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    # keep reducing while the STAP degree bound 2^m * n exceeds this
    max_branching: int = 2048
    node_budget: int = 400
    fallback: bool = True


# solve budget when ranking candidate qubits; the chosen gate is re-solved in full
PRICE_BUDGET = 20_000


def _cheapest_qubit_step(state: SparseState) -> ReductionStep:
    best = None
    for q in range(1, state.n + 1):
        if not cofactor_index_sets(state, q)[1]:
            continue
        controls = _active_controls(state, q)
        table, initial = _fix_table(state, q, controls)
        cost = mcry.exact_cnot_count(table, initial, PRICE_BUDGET)
        st = ReductionStep([MCRy(table, q, initial)], _apply_table(state, table, q), cost)
        rank = (st.cost, st.state.m, q)
        if best is None or rank < best[0]:
            best = (rank, st)
    return best[1]


def _needs_reduction(state: SparseState, cfg: HybridConfig) -> bool:
    s = cfg.search
    if state.m > s.max_card or entangled_qubit_count(state) > s.max_entangled:
        return True
    return (1 << state.m) * state.n > cfg.max_branching


def _hybrid_step(state: SparseState) -> ReductionStep:
    if state.n * state.m < (1 << state.n):
        return cardinality_reduce_step(state)
    return _cheapest_qubit_step(state)


def prepare_hybrid(state: SparseState, config: HybridConfig = HybridConfig(), check: bool = True) -> Circuit:
    """Reduce with the baseline steps until the state fits, then finish with A*."""
    steps = []
    cur, rot = clear_separable(state)
    pre = ReductionStep(list(rot), cur, 0)
    steps.append(pre)
    while cur.m > 1 and _needs_reduction(cur, config):
        st = _hybrid_step(cur)
        steps.append(st)
        cur, rot = clear_separable(st.state)
        steps.append(ReductionStep(list(rot), cur, 0))
    down = []
    for st in steps:
        down.extend(st.gates)
    head = Circuit(state.n, down)
    try:
        sc = replace(config.search, node_budget=min(config.search.node_budget, config.node_budget))
        tail = astar_search(cur, sc).circuit
    except (BudgetExceeded, CapExceeded):
        if not config.fallback:
            raise
        tail = _fallback(cur)
    circuit = Circuit(state.n, tail.gates + invert(head).gates)
    if check:
        _check(circuit, state, EXACT)
    return circuit


def _fallback(state: SparseState) -> Circuit:
    steps = []
    cur = state
    while cur.m > 1:
        st = _hybrid_step(cur)
        steps.append(st)
        cur, rot = clear_separable(st.state)
        steps.append(ReductionStep(list(rot), cur, 0))
    return _finish(cur, steps, state.n)
