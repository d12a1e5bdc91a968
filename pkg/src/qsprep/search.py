"""Exact CNOT synthesis by A* over single-target amplitude-preserving transitions.

The search runs from the target toward any basis state. Every edge is one
multi-controlled Ry on a single target qubit that keeps amplitude magnitudes
(a pair of indices may merge into one). Its cost is the CNOT count of the
rotation table's decomposition on the known input. After each edge, separable
qubits are rotated to |0> for free, so equivalent states share a node.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

from . import mcry
from .canon import canonical_key, clear_separable, raw_key
from .circuit import EXACT, GRAYCODE, Circuit, X, invert
from .qstate import SparseState, entangled_qubit_count

KEEP, FLIP, MERGE0, MERGE1 = "keep", "flip", "merge0", "merge1"
SINGLE_ACTIONS = (KEEP, FLIP)
PAIR_ACTIONS = (KEEP, FLIP, MERGE0, MERGE1)


class SearchError(RuntimeError):
    pass


class CapExceeded(SearchError):
    pass


class BudgetExceeded(SearchError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    cost_model: str = EXACT
    max_entangled: int = 4
    max_card: int = 16
    # only applied when m exceeds prune_above
    max_distinct_angles: int = 4
    prune_above: int = 8
    node_budget: int = 10_000_000
    canonicalize: bool = True
    heuristic: bool = True


@dataclass(frozen=True)
class StapOperator:
    target: int
    actions: tuple  # (projection, action) per group, projection has the target bit cleared
    table: mcry.RotationTable
    initial: tuple
    cost: int

    def gates(self, cost_model: str = EXACT):
        return mcry.decompose(self.table, self.target, self.initial, cost_model).gates


@dataclass
class SearchNode:
    state: SparseState
    key: bytes
    g: int
    h: int
    parent: bytes | None = None
    edge: tuple = ()  # (operator, clearing gates), target-to-ground direction


@dataclass
class SearchResult:
    circuit: Circuit
    cost: int
    expansions: int
    generated: int


def heuristic_lower_bound(state: SparseState) -> int:
    return (entangled_qubit_count(state) + 1) // 2


def _angle(a0: float, a1: float) -> float:
    return 2.0 * math.atan2(a1, a0)


def _groups(state: SparseState, t: int):
    pos = 1 << (state.n - t)
    groups: dict[int, list] = {}
    for x, a in state.entries.items():
        g = groups.setdefault(x & ~pos, [0.0, 0.0])
        g[1 if x & pos else 0] = a
    return sorted(groups.items())


def _outcome(action, a0, a1):
    if action == KEEP:
        return a0, a1
    if action == FLIP:
        return a1, a0
    r = math.hypot(a0, a1)
    if action == MERGE0:
        return math.copysign(r, a0 if a0 != 0 else a1), 0.0
    return 0.0, math.copysign(r, a1 if a1 != 0 else a0)


def _pattern(proj: int, n: int, t: int) -> int:
    # drop the target bit: pattern bits are the other qubits, qubit order preserved
    pos = n - t
    return ((proj >> (pos + 1)) << pos) | (proj & ((1 << pos) - 1))


def _edge_cost(table, initial, cost_model):
    if cost_model == GRAYCODE:
        return mcry.graycode_cnot_count(mcry.reduce_support(table))
    return mcry.exact_cnot_count(table, initial)


def _stap_moves(state: SparseState, config: SearchConfig):
    """Unpriced STAP successors as (raw state, target, actions, table, initial)."""
    if state.m > config.max_card:
        raise CapExceeded(f"cardinality {state.m} above {config.max_card}; use the reduce flows")
    n = state.n
    for t in range(1, n + 1):
        groups = _groups(state, t)
        pos = 1 << (n - t)
        ctrl = tuple(q for q in range(1, n + 1) if q != t)
        options = [PAIR_ACTIONS if (a0 != 0.0 and a1 != 0.0) else SINGLE_ACTIONS for _, (a0, a1) in groups]
        phis = [_angle(a0, a1) for _, (a0, a1) in groups]
        pats = [_pattern(proj, n, t) for proj, _ in groups]
        for acts in itertools.product(*options):
            if all(a == KEEP for a in acts):
                continue
            angles = [mcry.DONT_CARE] * (1 << (n - 1))
            initial = [0.0] * (1 << (n - 1))
            entries = {}
            for (proj, (a0, a1)), act, phi_in, p in zip(groups, acts, phis, pats):
                b0, b1 = _outcome(act, a0, a1)
                angles[p] = _angle(b0, b1) - phi_in
                initial[p] = phi_in
                if b0 != 0.0:
                    entries[proj] = b0
                if b1 != 0.0:
                    entries[proj | pos] = b1
            table = mcry.RotationTable(ctrl, tuple(angles))
            if state.m > config.prune_above:
                distinct = []
                for _, a in table.care():
                    if not any(mcry.same_angle(a, d) for d in distinct):
                        distinct.append(a)
                if len(distinct) > config.max_distinct_angles:
                    continue
            yield SparseState(n, entries), t, tuple((proj, a) for (proj, _), a in zip(groups, acts)), table, tuple(initial)


def enumerate_stap_neighbors(state: SparseState, config: SearchConfig = SearchConfig()):
    """All STAP successors as (state, operator, cost); the raw state before clearing separable qubits."""
    out = []
    for nxt, t, acts, table, initial in _stap_moves(state, config):
        cost = _edge_cost(table, initial, config.cost_model)
        out.append((nxt, StapOperator(t, acts, table, initial, cost), cost))
    return out


def _check_caps(state: SparseState, config: SearchConfig):
    if state.m > config.max_card:
        raise CapExceeded(f"cardinality {state.m} above cap {config.max_card}")
    k = entangled_qubit_count(state)
    if k > config.max_entangled:
        raise CapExceeded(f"{k} entangled qubits above cap {config.max_entangled}")


def _basis_gates(state: SparseState):
    (x,) = state.entries
    return tuple(X(q) for q in range(1, state.n + 1) if (x >> (state.n - q)) & 1)


def _search(target: SparseState, config: SearchConfig, key_fn: Callable, h_fn: Callable) -> SearchResult:
    _check_caps(target, config)
    start, pre = clear_separable(target)
    root = SearchNode(start, key_fn(start), 0, h_fn(start))
    nodes = {root.key: root}
    tie = itertools.count()
    heap = [(root.g + root.h, root.h, root.key, next(tie))]
    expansions = generated = 0
    goal = None
    while heap:
        f, h, key, _ = heapq.heappop(heap)
        node = nodes[key]
        if node.g + node.h < f:
            continue  # stale entry
        if node.state.m == 1:
            goal = node
            break
        expansions += 1
        if expansions > config.node_budget:
            raise BudgetExceeded(f"node budget {config.node_budget} exhausted")
        for raw, t, acts, table, initial in _stap_moves(node.state, config):
            generated += 1
            nxt, rot = clear_separable(raw)
            k = key_fn(nxt)
            old = nodes.get(k)
            # edge costs are non-negative, so price the edge only when it can improve
            if old is not None and old.g <= node.g:
                continue
            cost = _edge_cost(table, initial, config.cost_model)
            g = node.g + cost
            if old is not None and old.g <= g:
                continue
            edge = (StapOperator(t, acts, table, initial, cost), tuple(rot))
            hv = old.h if old is not None else h_fn(nxt)
            nodes[k] = SearchNode(nxt, k, g, hv, key, edge)
            heapq.heappush(heap, (g + hv, hv, k, next(tie)))
    if goal is None:  # pragma: no cover - the ground state is always reachable
        raise SearchError("search space exhausted without reaching a basis state")
    path = []
    node = goal
    while node.parent is not None:
        path.append(node.edge)
        node = nodes[node.parent]
    down = list(pre)
    for op, rot in reversed(path):
        down.extend(op.gates(config.cost_model))
        down.extend(rot)
    down.extend(_basis_gates(goal.state))
    circuit = invert(Circuit(target.n, down))
    return SearchResult(circuit, goal.g, expansions, generated)


def astar_search(target: SparseState, config: SearchConfig = SearchConfig()) -> SearchResult:
    key_fn = canonical_key if config.canonicalize else raw_key
    h_fn = heuristic_lower_bound if config.heuristic else (lambda s: 0)
    return _search(target, config, key_fn, h_fn)


def astar_prepare(target: SparseState, config: SearchConfig = SearchConfig()) -> Circuit:
    """Fewest-CNOT preparation circuit (under the STAP model) for ``target``."""
    return astar_search(target, config).circuit


def dijkstra_search(target: SparseState, config: SearchConfig = SearchConfig()) -> SearchResult:
    """Uninformed reference: no heuristic, no canonicalization."""
    return _search(target, config, raw_key, lambda s: 0)
