"""Reference implementations that share no code with the package."""
from __future__ import annotations

import itertools
import math

import numpy as np

I2 = np.eye(2)
XM = np.array([[0.0, 1.0], [1.0, 0.0]])
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


def ry(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def _kron_all(mats):
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def _single(n, q, m):
    return _kron_all([m if k == q else I2 for k in range(1, n + 1)])


def gate_matrix(n, g):
    """Full 2^n x 2^n matrix, qubit 1 leftmost in the Kronecker product."""
    name = type(g).__name__
    if name == "Ry":
        return _single(n, g.target, ry(g.theta))
    if name == "X":
        return _single(n, g.target, XM)
    if name == "CNOT":
        on, off = (P1, P0) if g.polarity else (P0, P1)
        a = _kron_all([on if k == g.control else (XM if k == g.target else I2) for k in range(1, n + 1)])
        b = _kron_all([off if k == g.control else I2 for k in range(1, n + 1)])
        return a + b
    if name == "MCRy":
        table = g.table
        c = len(table.controls)
        total = np.zeros((1 << n, 1 << n))
        for p, a in enumerate(table.angles):
            theta = a if isinstance(a, float) else 0.0
            bits = [(p >> (c - 1 - i)) & 1 for i in range(c)]
            sel = {q: (P1 if b else P0) for q, b in zip(table.controls, bits)}
            total += _kron_all([sel.get(k, ry(theta) if k == g.target else I2) for k in range(1, n + 1)])
        return total
    raise TypeError(name)


def kron_simulate(circuit):
    n = circuit.n
    vec = np.zeros(1 << n)
    vec[0] = 1.0
    for g in circuit.gates:
        vec = gate_matrix(n, g) @ vec
    return vec


GRID = np.arange(64) * (math.pi / 16)  # one 4*pi period


def brute_force_mcry(care, c, max_k=3):
    """Fewest CNOTs (all on the target) for a known-input table.

    ``care`` maps pattern -> (input angle, rotation angle). All Ry angles but
    the last range over a pi/16 grid; the last one is read off numerically.
    Returns None when nothing up to ``max_k`` works.
    """
    pats = sorted(care)
    bits = np.array([[(p >> (c - 1 - i)) & 1 for i in range(c)] for p in pats]).reshape(len(pats), c)
    phi = np.array([care[p][0] for p in pats])
    out = phi + np.array([care[p][1] for p in pats])
    want = np.stack([np.cos(out / 2), np.sin(out / 2)], axis=-1)  # (P, 2)
    start = np.stack([np.cos(phi / 2), np.sin(phi / 2)], axis=-1)
    for k in range(max_k + 1):
        if k > 0 and c == 0:
            break
        for seq in itertools.product(range(c), repeat=k):
            if any(a == b for a, b in zip(seq, seq[1:])):
                continue  # adjacent equal CNOTs cancel
            for final_x in (False, True):
                if _grid_feasible(start, want, bits, seq, final_x):
                    return k
    return None


def _grid_feasible(start, want, bits, seq, final_x):
    k = len(seq)
    angles = np.array(list(itertools.product(GRID, repeat=k)), dtype=float).reshape(len(GRID) ** k, k)
    v = np.broadcast_to(start, (angles.shape[0],) + start.shape).copy()  # (A, P, 2)
    for step in range(k):
        c, s = np.cos(angles[:, step] / 2)[:, None], np.sin(angles[:, step] / 2)[:, None]
        v = np.stack([c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1]], axis=-1)
        flip = bits[:, seq[step]] == 1
        v[:, flip] = v[:, flip][..., ::-1]
    goal = want[:, ::-1] if final_x else want
    # the last Ry must rotate every pattern by the same angle (mod 4*pi)
    need = 2 * np.arctan2(goal[:, 1], goal[:, 0])[None, :] - 2 * np.arctan2(v[..., 1], v[..., 0])
    spread = np.remainder(need - need[:, :1] + 2 * math.pi, 4 * math.pi) - 2 * math.pi
    return bool((np.abs(spread).max(axis=1) < 1e-7).any())


GRID_AMPS = (1.0, math.sqrt(0.5), -math.sqrt(0.5), -1.0)  # cos(k*pi/4), nonzero


def oracle_family(count=200, seed=2023, n=3, max_m=4):
    """Seeded (n, entries) pairs with amplitudes drawn from cos(k*pi/4)."""
    import random
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        m = rng.randint(1, max_m)
        idx = rng.sample(range(1 << n), m)
        out.append((n, {x: rng.choice(GRID_AMPS) for x in idx}))
    return out
