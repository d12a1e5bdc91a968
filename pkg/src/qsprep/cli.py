"""Command-line entry point: ``qsprep <subcommand> ...``.

Exit codes: 0 success, 2 verification failure, 3 cap violation or timeout,
1 for input errors.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import signal
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import mcry
from .canon import count_canonical_uniform
from .circuit import EXACT, GRAYCODE, Circuit, cnot_cost, emit_qasm, lower_to_basis, parse_qasm
from .qstate import StateError, load, make_dicke, make_ghz, make_w, random_state
from .reduce import HybridConfig, ReductionError, prepare_hybrid, prepare_mflow, prepare_nflow
from .search import BudgetExceeded, CapExceeded, SearchConfig, astar_prepare
from .sim import fidelity, simulate

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_CAP = 0, 1, 2, 3
FLOWS = ("exact", "nflow", "mflow", "hybrid")
DEFAULT_TIMEOUT = 3600.0

# Dicke rows of the benchmark grid
DICKE_GRID = [(3, 1), (4, 1), (4, 2), (5, 1), (5, 2), (6, 1), (6, 2), (6, 3),
              (7, 1), (7, 2), (7, 3), (8, 1), (8, 2), (8, 3), (8, 4)]


class InstanceTimeout(Exception):
    pass


# --- flows -------------------------------------------------------------------

def search_config(args) -> SearchConfig:
    return SearchConfig(cost_model=args.cost_model,
                        max_entangled=args.exact_max_entangled,
                        max_card=args.exact_max_card,
                        max_distinct_angles=args.max_distinct_angles,
                        node_budget=args.node_budget)


def run_flow(state, flow: str, config: SearchConfig, fallback: bool = True) -> tuple[Circuit, str]:
    """Circuit for ``state`` and the cost model its MCRy gates are priced with."""
    if flow == "exact":
        return astar_prepare(state, config), config.cost_model
    if flow == "nflow":
        return prepare_nflow(state, GRAYCODE, check=False), GRAYCODE
    if flow == "mflow":
        return prepare_mflow(state, check=False), GRAYCODE
    if flow == "hybrid":
        return prepare_hybrid(state, HybridConfig(search=config, fallback=fallback), check=False), EXACT
    raise ValueError(f"unknown flow {flow!r}")


def lowered(state, flow, config, fallback=True) -> Circuit:
    circuit, model = run_flow(state, flow, config, fallback)
    return lower_to_basis(circuit, model)


@contextlib.contextmanager
def _deadline(seconds):
    if not seconds or not hasattr(signal, "SIGALRM"):
        yield
        return

    def fire(signum, frame):
        raise InstanceTimeout()

    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# --- benchmark records ---------------------------------------------------------

@dataclass
class Record:
    key: tuple
    n: int
    m: int
    flow: str
    cnots: int | None  # None for TLE or cap
    seconds: float
    verified: bool
    status: str = "ok"
    extra: dict = field(default_factory=dict)


def _instance(job):
    key, state, flow, config, timeout = job
    t0 = time.perf_counter()
    try:
        with _deadline(timeout):
            circ = lowered(state, flow, config)
    except InstanceTimeout:
        return Record(key, state.n, state.m, flow, None, time.perf_counter() - t0, False, "TLE")
    except (CapExceeded, BudgetExceeded):
        return Record(key, state.n, state.m, flow, None, time.perf_counter() - t0, False, "CAP")
    dt = time.perf_counter() - t0
    ok = fidelity(simulate(circ), state) >= 1 - 1e-6
    return Record(key, state.n, state.m, flow, circ.count_cx(), dt, ok, "ok" if ok else "FAIL")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("QSPREP_THREADS", "1")))
    except ValueError:
        return 1


def run_jobs(jobs) -> list[Record]:
    """Records ordered by instance key, whatever the scheduling."""
    workers = _workers()
    if workers == 1 or len(jobs) <= 1:
        out = [_instance(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_instance, jobs))
    return sorted(out, key=lambda r: r.key)


def geo_mean(values) -> float | None:
    vals = [v for v in values if v is not None and v > 0]
    if not vals:
        return None
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


def _fmt(v) -> str:
    if v is None:
        return "TLE"
    return f"{v:.3f}" if isinstance(v, float) else str(v)


# --- subcommands ------------------------------------------------------------------

def _read_state(args):
    kind = args.state
    if kind in ("dicke", "ghz", "w"):
        if args.n is None:
            raise StateError(f"{kind} needs --n")
        if kind == "dicke":
            if args.k is None:
                raise StateError("dicke needs --k")
            return make_dicke(args.n, args.k)
        return make_ghz(args.n) if kind == "ghz" else make_w(args.n)
    return load(kind)


def cmd_prepare(args) -> int:
    state = _read_state(args)
    config = search_config(args)
    try:
        circ = lowered(state, args.flow, config, args.fallback)
    except (CapExceeded, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    qasm = emit_qasm(circ)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(qasm)
    elif args.print_qasm:
        sys.stdout.write(qasm)
    verified = None
    if not args.no_verify:
        verified = fidelity(simulate(circ), state) >= 1 - args.tol
    print(f"cnots={circ.count_cx()} verified={verified if verified is not None else 'skipped'}")
    return EXIT_VERIFY if verified is False else EXIT_OK


def cmd_verify(args) -> int:
    with open(args.qasm) as fh:
        circ = parse_qasm(fh.read())
    state = load(args.state)
    if circ.n != state.n:
        print(f"fidelity=0 ok=False (circuit has {circ.n} qubits, state {state.n})")
        return EXIT_VERIFY
    f = fidelity(simulate(circ), state)
    ok = f >= 1 - args.tol
    print(f"fidelity={f:.12f} cnots={circ.count_cx()} ok={ok}")
    return EXIT_OK if ok else EXIT_VERIFY


def _parse_initial(text):
    if text is None or text.lower() == "none":
        return None
    vals = [float(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else tuple(vals)


def cmd_decompose_mcry(args) -> int:
    with open(args.table) as fh:
        doc = json.load(fh)
    table = mcry.RotationTable.from_dict(doc)
    initial = _parse_initial(args.initial) if args.initial is not None else doc.get("initial", 0.0)
    target = args.target or (max(table.controls, default=0) + 1)
    mode = GRAYCODE if args.mode == "gray" else args.mode
    if mode == GRAYCODE:
        circ = mcry.gray_code_decompose(table, target)
    else:
        circ = mcry.exact_decompose(table, initial, target)
    sys.stdout.write(emit_qasm(lower_to_basis(circ, mode)))
    print(f"// cnots={circ.count_cx()}")
    return EXIT_OK


def cmd_canon_count(args) -> int:
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["m", "raw", "canonical"])
    for m in range(args.m_min, args.m_max + 1):
        out.writerow([m, math.comb(1 << args.n, m), count_canonical_uniform(args.n, m)])
    return EXIT_OK


def _write_report(records, flows, group_cols, group_of, timing, fh):
    out = csv.writer(fh, lineterminator="\n")
    head = list(group_cols) + ["flow", "cnots", "verified", "status"] + (["seconds"] if timing else [])
    out.writerow(head)
    for r in records:
        row = list(group_of(r)) + [r.flow, _fmt(r.cnots), r.verified, r.status]
        if timing:
            row.append(f"{r.seconds:.3f}")
        out.writerow(row)
    for flow in flows:
        gm = geo_mean(r.cnots for r in records if r.flow == flow)
        pad = ["geo_mean"] + [""] * (len(group_cols) - 1)
        out.writerow(pad + [flow, "" if gm is None else f"{gm:.3f}", "", ""] + ([""] if timing else []))


def _flows(text):
    flows = tuple(f.strip() for f in text.split(",") if f.strip())
    bad = [f for f in flows if f not in FLOWS]
    if bad:
        raise ValueError(f"unknown flow(s): {', '.join(bad)}")
    return flows


def _emit(args, records, flows, cols, group_of) -> int:
    buf = io.StringIO()
    _write_report(records, flows, cols, group_of, args.timing, buf)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return EXIT_VERIFY if any(r.status == "FAIL" for r in records) else EXIT_OK


def cmd_bench_dicke(args) -> int:
    flows = _flows(args.flows)
    config = search_config(args)
    jobs = []
    for n, k in DICKE_GRID:
        if n > args.max_n:
            continue
        state = make_dicke(n, k)
        for i, flow in enumerate(flows):
            jobs.append(((n, k, i), state, flow, config, args.timeout))
    records = run_jobs(jobs)
    return _emit(args, records, flows, ["n", "k"], lambda r: r.key[:2])


def cmd_bench_random(args) -> int:
    flows = _flows(args.flows)
    config = search_config(args)
    jobs = []
    for n in range(args.n_min, args.n_max + 1):
        m = (1 << (n - 1)) if args.density == "dense" else n
        if args.m is not None:
            m = args.m
        for j in range(args.count):
            seed = args.seed * 1_000_003 + n * 1009 + j
            state = random_state(n, m, seed)
            for i, flow in enumerate(flows):
                jobs.append(((n, j, i), state, flow, config, args.timeout))
    records = run_jobs(jobs)
    return _emit(args, records, flows, ["n", "m", "instance"], lambda r: (r.n, r.m, r.key[1]))


# --- parser ----------------------------------------------------------------------

def _add_search_flags(p):
    p.add_argument("--cost-model", choices=(EXACT, GRAYCODE), default=EXACT)
    p.add_argument("--exact-max-entangled", type=int, default=4)
    p.add_argument("--exact-max-card", type=int, default=16)
    p.add_argument("--max-distinct-angles", type=int, default=4)
    p.add_argument("--node-budget", type=int, default=10_000_000)


def _add_bench_flags(p, default_flows):
    _add_search_flags(p)
    p.add_argument("--flows", default=default_flows, help="comma-separated subset of " + ",".join(FLOWS))
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds per instance")
    p.add_argument("--timing", action="store_true", help="add wall-time column (breaks byte-identical reruns)")
    p.add_argument("-o", "--output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsprep", description="CNOT-lean preparation of real-amplitude states")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="synthesize a preparation circuit")
    p.add_argument("state", help="state file, or one of dicke/ghz/w with --n/--k")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--flow", choices=FLOWS, default="hybrid")
    _add_search_flags(p)
    p.add_argument("--fallback", action=argparse.BooleanOptionalAction, default=True,
                   help="hybrid: finish with reduction steps when the search gives up")
    p.add_argument("--no-verify", action="store_true")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("-o", "--output", help="QASM output file")
    p.add_argument("--print-qasm", action="store_true")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("verify", help="check a QASM circuit against a state")
    p.add_argument("qasm")
    p.add_argument("state")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("decompose-mcry", help="decompose a rotation table")
    p.add_argument("table", help='JSON {"controls": [...], "entries": {"01": angle or "X"}}')
    p.add_argument("--mode", choices=(EXACT, GRAYCODE, "gray"), default=EXACT)
    p.add_argument("--initial", help="input angle, comma list per pattern, or 'none'")
    p.add_argument("--target", type=int)
    p.set_defaults(func=cmd_decompose_mcry)

    p = sub.add_parser("canon-count", help="count canonical classes of uniform states")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--m-max", type=int, default=8)
    p.set_defaults(func=cmd_canon_count)

    p = sub.add_parser("bench-dicke", help="Dicke state benchmark (CSV)")
    p.add_argument("--max-n", type=int, default=5)
    _add_bench_flags(p, "nflow,mflow,hybrid")
    p.set_defaults(func=cmd_bench_dicke)

    p = sub.add_parser("bench-random", help="random state benchmark (CSV)")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--density", choices=("sparse", "dense"), default="sparse")
    p.add_argument("--m", type=int, help="override the cardinality")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_bench_flags(p, "nflow,mflow,hybrid")
    p.set_defaults(func=cmd_bench_random)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StateError, ValueError, OSError, ReductionError, mcry.DecompositionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY if isinstance(exc, (ReductionError, mcry.DecompositionError)) else EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
