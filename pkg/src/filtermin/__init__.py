"""Exact state minimization for combinatorial filters via constrained covers
of the compatibility complex, solved with SAT."""

from .compat import (
    CompatibilityGraph,
    SimplicialComplex,
    compatibility_complex,
    compatibility_graph,
    group_compatible,
    pairwise_compatible,
)
from .cover import Cover, CoverError, induce_filter, induced_cover, is_valid_cover
from .encode import CnfInstance, EncodeOptions, decode_cover, encode_k_cover
from .filter import (
    FilterError,
    NotDeterministicError,
    PFilter,
    determinize,
    is_deterministic,
    output_simulates,
    reached,
)
from .instances import InstanceSpec, builtin, gen_grid, gen_nxm
from .minimize import (
    MinimizeOptions,
    MinimizeReport,
    SoundnessError,
    baseline_stepwise_heuristic,
    minimize,
    minimize_so_by_choice_enumeration,
)
from .oracle import brute_force_minimize, verify_solution
from .solvers import get_solver
from .zipper import ZipperConstraint, cover_satisfies, generate_zippers

__version__ = "0.1.0"

__all__ = [
    "CnfInstance",
    "CompatibilityGraph",
    "Cover",
    "CoverError",
    "EncodeOptions",
    "FilterError",
    "InstanceSpec",
    "MinimizeOptions",
    "MinimizeReport",
    "NotDeterministicError",
    "PFilter",
    "SimplicialComplex",
    "SoundnessError",
    "ZipperConstraint",
    "baseline_stepwise_heuristic",
    "brute_force_minimize",
    "builtin",
    "compatibility_complex",
    "compatibility_graph",
    "cover_satisfies",
    "decode_cover",
    "determinize",
    "encode_k_cover",
    "gen_grid",
    "gen_nxm",
    "generate_zippers",
    "get_solver",
    "group_compatible",
    "induce_filter",
    "induced_cover",
    "is_deterministic",
    "is_valid_cover",
    "minimize",
    "minimize_so_by_choice_enumeration",
    "output_simulates",
    "pairwise_compatible",
    "reached",
    "verify_solution",
]
