"""Entanglement lower bounds for one-round non-local quantum computation.

Simulates f-routing and f-BB84 protocols as quantum channels, evaluates their
structure functions and rank bounds, certifies pattern ranks of Boolean
functions, and carries the bounds over to conditional disclosure of secrets.
"""

__version__ = "0.1.0"

from .boolfn import TruthTable, ZeroPattern, make_family, negate, support_pattern
from .nlqc import (
    GardenHoseStrategy,
    MidState,
    NLQCProtocol,
    compute_mid_state,
    entanglement_cost,
    fixture_strategy,
    garden_hose_compile,
    zoo_protocol,
)
from .frouting import (
    decoupling_gap,
    epsilon_star,
    omega1_check,
    rank_bound,
    structure_function,
    structure_matrix,
    verify_decomposition,
    verify_routing,
)
from .fbb84 import (
    garden_hose_bb84,
    post_measurement_states,
    rank_bound_bb84,
    referee_projector,
    structure_function_bb84,
    structure_matrix_bb84,
    verify_bb84,
)
from .patternrank import brute_force_min_rank, family_bound, triangular_bound
from .cds import (
    brute_force_cds_search,
    cds_to_cdqs,
    fr_to_cdqs,
    randomness_bound,
    verify_cdqs,
    verify_cds,
)
