"""Two-barrier impulse dividend solver for a threshold regime-switching diffusion."""

from .model import (
    CaseLabel,
    ConvexityProfile,
    DerivedConstants,
    ModelParams,
    classify_case,
    convexity_profile,
    derive_constants,
)
from .scale import (
    ScaleContext,
    build_context,
    exit_down,
    exit_up,
    g,
    g_double_prime,
    g_minus,
    g_plus,
    g_prime,
    value_upper_bound,
)
from .solver import (
    BarrierPair,
    BarrierSolutionSet,
    DomainError,
    NoBracketError,
    SolverError,
    crossover_levels,
    invert_monotone,
    phi_family,
    psi,
    solve_barriers,
    upper_search_bound,
)

__all__ = [
    "BarrierPair",
    "BarrierSolutionSet",
    "CaseLabel",
    "ConvexityProfile",
    "DerivedConstants",
    "DomainError",
    "ModelParams",
    "NoBracketError",
    "ScaleContext",
    "SolverError",
    "build_context",
    "classify_case",
    "convexity_profile",
    "crossover_levels",
    "derive_constants",
    "exit_down",
    "exit_up",
    "g",
    "g_double_prime",
    "g_minus",
    "g_plus",
    "g_prime",
    "invert_monotone",
    "phi_family",
    "psi",
    "solve_barriers",
    "upper_search_bound",
    "value_upper_bound",
]

__version__ = "0.1.0"
