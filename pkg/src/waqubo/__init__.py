"""Quantum-inspired wavelength assignment: graph coloring via QUBO and SimCIM annealing."""

from .annealer import AnnealParams, AnnealResult, default_params, simcim_solve
from .exact import ExactResult, chromatic_number, exhaustive_qubo_min
from .graph import Graph, PathInstance, conflict_graph, erdos_renyi, ldf_coloring
from .qubo import (
    IsingProblem,
    PenaltyCoefficients,
    QuboProblem,
    build_original_qubo,
    build_proposed_qubo,
    certified_penalties,
    energy,
    hamiltonian_terms,
    heuristic_penalties,
    to_ising,
)
from .solution import ColoringSolution
from .solver import check_coloring, decode, solve_exact, solve_wa, solve_wa_binary_search

__version__ = "0.1.0"
