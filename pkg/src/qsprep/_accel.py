"""Hot kernels with an optional numba JIT.

Set ``QSPREP_NO_NUMBA=1`` to run the pure Python/numpy path (same results,
much slower search). ``JIT_ENABLED`` reports which path is active.
"""
from __future__ import annotations

import math
import os

import numpy as np

_DISABLE = os.environ.get("QSPREP_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    JIT_ENABLED = True
except ImportError:  # pragma: no cover - exercised via the env flag in a subprocess
    JIT_ENABLED = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi


# --- dense statevector gates -------------------------------------------------

@njit(cache=True)
def _ry_jit(vec, pos, theta):
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    step = 1 << pos
    for i in range(vec.shape[0]):
        if (i >> pos) & 1 == 0:
            a = vec[i]
            b = vec[i + step]
            vec[i] = c * a - s * b
            vec[i + step] = s * a + c * b


@njit(cache=True)
def _cx_jit(vec, cpos, tpos, polarity):
    step = 1 << tpos
    for i in range(vec.shape[0]):
        if (i >> tpos) & 1 == 0 and ((i >> cpos) & 1) == polarity:
            a = vec[i]
            vec[i] = vec[i + step]
            vec[i + step] = a


@njit(cache=True)
def _x_jit(vec, tpos):
    step = 1 << tpos
    for i in range(vec.shape[0]):
        if (i >> tpos) & 1 == 0:
            a = vec[i]
            vec[i] = vec[i + step]
            vec[i + step] = a


def _split(vec, pos):
    # view as (high, 2, low) with the middle axis being bit `pos`
    return vec.reshape(-1, 2, 1 << pos)


def _ry_np(vec, pos, theta):
    v = _split(vec, pos)
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    a = v[:, 0, :].copy()
    b = v[:, 1, :]
    v[:, 0, :] = c * a - s * b
    v[:, 1, :] = s * a + c * b


def _cx_np(vec, cpos, tpos, polarity):
    idx = np.arange(vec.shape[0])
    sel = idx[(((idx >> tpos) & 1) == 0) & (((idx >> cpos) & 1) == polarity)]
    other = sel + (1 << tpos)
    vec[sel], vec[other] = vec[other].copy(), vec[sel].copy()


def _x_np(vec, tpos):
    v = _split(vec, tpos)
    v[:, [0, 1], :] = v[:, [1, 0], :]


def apply_ry(vec, pos, theta, use_jit=None):
    (_ry_jit if _pick(use_jit) else _ry_np)(vec, pos, float(theta))


def apply_cx(vec, cpos, tpos, polarity=1, use_jit=None):
    (_cx_jit if _pick(use_jit) else _cx_np)(vec, cpos, tpos, int(polarity))


def apply_x(vec, tpos, use_jit=None):
    (_x_jit if _pick(use_jit) else _x_np)(vec, tpos)


def _pick(use_jit):
    return JIT_ENABLED if use_jit is None else (use_jit and JIT_ENABLED)


# --- modular linear systems --------------------------------------------------

@njit(cache=True)
def solve_mod(A, d, period, tol):
    """Solve ``A @ theta == d (mod period)`` for real theta, A integer.

    Unimodular integer row elimination keeps the lattice ``period * Z^m``
    invariant, so after reaching echelon form the all-zero rows decide
    feasibility exactly and the pivot rows are solved over the reals.
    Returns ``(ok, theta)``; free variables are set to 0.
    """
    A = A.copy()
    d = d.copy()
    m, p = A.shape
    pivcols = np.full(m, -1, dtype=np.int64)
    row = 0
    for col in range(p):
        if row >= m:
            break
        while True:
            piv = -1
            best = 0
            for r in range(row, m):
                v = abs(A[r, col])
                if v != 0 and (piv < 0 or v < best):
                    piv = r
                    best = v
            if piv < 0:
                break
            if piv != row:
                for c in range(p):
                    t = A[row, c]
                    A[row, c] = A[piv, c]
                    A[piv, c] = t
                t2 = d[row]
                d[row] = d[piv]
                d[piv] = t2
            clean = True
            for r in range(row + 1, m):
                if A[r, col] != 0:
                    q = A[r, col] // A[row, col]
                    for c in range(p):
                        A[r, c] -= q * A[row, c]
                    d[r] -= q * d[row]
                    if A[r, col] != 0:
                        clean = False
            if clean:
                break
        if A[row, col] != 0:
            pivcols[row] = col
            row += 1
    theta = np.zeros(p)
    for r in range(row, m):
        res = d[r] % period
        if min(res, period - res) > tol:
            return False, theta
    for r in range(row - 1, -1, -1):
        col = pivcols[r]
        acc = d[r]
        for c in range(col + 1, p):
            acc -= A[r, c] * theta[c]
        theta[col] = acc / A[r, col]
    return True, theta


@njit(cache=True)
def build_system(bits, phi_in, phi_out, seq, final_x, known_input):
    """Equality system for the template Ry(t0) [CX(seq[k]) Ry(tk)]* [X].

    Angles are state angles: a target amplitude pair (cos(p/2), sin(p/2)).
    Ry adds to the angle and an active CX reflects it, p -> pi - p, exactly
    modulo 4*pi. Returns ``(A, rhs, ok)``; ``ok`` is False in unitary mode
    when some care pattern sees an odd number of reflections.
    """
    m = bits.shape[0]
    K = seq.shape[0]
    A = np.zeros((m, K + 1), dtype=np.int64)
    rhs = np.zeros(m)
    for x in range(m):
        A[x, 0] = 1
        s_in = 1
        const = 0.0
        for k in range(K):
            if bits[x, seq[k]] == 1:
                for j in range(k + 1):
                    A[x, j] = -A[x, j]
                s_in = -s_in
                const = math.pi - const
            A[x, k + 1] += 1
        if final_x:
            for j in range(K + 1):
                A[x, j] = -A[x, j]
            s_in = -s_in
            const = math.pi - const
        if known_input:
            rhs[x] = phi_out[x] - s_in * phi_in[x] - const
        else:
            if s_in != 1:
                return A, rhs, False
            rhs[x] = phi_out[x] - const
    return A, rhs, True


@njit(cache=True)
def global_sign_system(A, rhs):
    """Rewrite so that a common 2*pi offset on every row is admissible.

    Row 0 becomes ``2*a0 = 2*d0 (mod 4pi)`` (i.e. a0 = d0 mod 2pi) and the
    others become differences with row 0, which must hold modulo 4pi.
    """
    B = np.empty_like(A)
    e = np.empty_like(rhs)
    B[0] = 2 * A[0]
    e[0] = 2.0 * rhs[0]
    for r in range(1, A.shape[0]):
        B[r] = A[r] - A[0]
        e[r] = rhs[r] - rhs[0]
    return B, e


@njit(cache=True)
def _next_seq(seq, c):
    # odometer over sequences without immediate repeats; returns False when exhausted
    K = seq.shape[0]
    i = K - 1
    while i >= 0:
        seq[i] += 1
        while seq[i] < c and i > 0 and seq[i] == seq[i - 1]:
            seq[i] += 1
        if seq[i] < c:
            for j in range(i + 1, K):
                v = 0
                if v == seq[j - 1]:
                    v = 1
                seq[j] = v
            return True
        i -= 1
    return False


@njit(cache=True)
def first_feasible(bits, phi_in, phi_out, K, known_input, tol):
    """Lexicographically first (sequence, final_x) of length K that solves the table.

    Returns ``(found, seq, final_x, theta)``.
    """
    c = bits.shape[1]
    seq = np.zeros(K, dtype=np.int64)
    empty = np.zeros(K + 1)
    if K > 0 and c == 0:
        return False, seq, False, empty
    if K > 1 and c == 1:
        return False, seq, False, empty
    for j in range(1, K):
        seq[j] = 0 if seq[j - 1] != 0 else 1
    nflags = 2 if known_input else 1
    while True:
        for f in range(nflags):
            fx = f == 1
            A, rhs, ok = build_system(bits, phi_in, phi_out, seq, fx, known_input)
            if ok:
                B, e = global_sign_system(A, rhs)
                good, theta = solve_mod(B, e, FOUR_PI, tol)
                if good:
                    return True, seq, fx, theta
        if K == 0 or not _next_seq(seq, c):
            break
    return False, seq, False, empty
