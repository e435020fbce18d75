"""Sparse-plus-low-rank matrix decomposition toolkit.

Provides an alternating-minimization heuristic, perspective-based conic
relaxations with an in-repo first-order solver, a branch-and-bound scheme
over sparsity patterns, baseline methods, and a synthetic benchmark harness.
"""

from .core import (
    ProblemInstance,
    SlrSolution,
    ConvexityConstants,
    objective,
    convexity_constants,
    worst_case_perturbations,
    unconstrained_min_value,
    matrix_completion_objective,
    reverse_huber_penalty,
)
from .altmin import (
    SparsityPattern,
    AmTrace,
    solve_lowrank_subproblem,
    solve_sparse_subproblem,
    alternating_minimization,
    iteration_bound,
    fixed_pattern_certificate,
)
from .bnb import branch_and_bound, exhaustive_oracle

__all__ = [
    "ProblemInstance",
    "SlrSolution",
    "ConvexityConstants",
    "objective",
    "convexity_constants",
    "worst_case_perturbations",
    "unconstrained_min_value",
    "matrix_completion_objective",
    "reverse_huber_penalty",
    "SparsityPattern",
    "AmTrace",
    "solve_lowrank_subproblem",
    "solve_sparse_subproblem",
    "alternating_minimization",
    "iteration_bound",
    "fixed_pattern_certificate",
    "branch_and_bound",
    "exhaustive_oracle",
]
