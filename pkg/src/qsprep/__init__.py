"""CNOT-lean preparation circuits for real-amplitude quantum states."""
from .circuit import CNOT, EXACT, GRAYCODE, Circuit, MCRy, Ry, X, cnot_cost, emit_qasm, invert, lower_to_basis
from .canon import canonical_key, canonicalize, count_canonical_uniform
from .mcry import DONT_CARE, RotationTable, exact_decompose, gray_code_decompose
from .qstate import SparseState, make_dicke, make_ghz, make_state, make_w, random_state
from .reduce import HybridConfig, prepare_hybrid, prepare_mflow, prepare_nflow
from .search import SearchConfig, astar_prepare, astar_search, dijkstra_search, heuristic_lower_bound
from .sim import fidelity, simulate, verify

__version__ = "0.1.0"

__all__ = [
    "CNOT", "EXACT", "GRAYCODE", "Circuit", "MCRy", "Ry", "X", "cnot_cost", "emit_qasm", "invert",
    "lower_to_basis", "canonical_key", "canonicalize", "count_canonical_uniform", "DONT_CARE",
    "RotationTable", "exact_decompose", "gray_code_decompose", "SparseState", "make_dicke", "make_ghz",
    "make_state", "make_w", "random_state", "HybridConfig", "prepare_hybrid", "prepare_mflow",
    "prepare_nflow", "SearchConfig", "astar_prepare", "astar_search", "dijkstra_search",
    "heuristic_lower_bound", "fidelity", "simulate", "verify",
]
