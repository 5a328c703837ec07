"""Byzantine approximate agreement on discrete convexity spaces.

Library, deterministic adversarial simulator, and CLI for agreement
protocols on chordal-graph convexities and cycle-free semilattices, with
brute-force oracles for every combinatorial claim.
"""

from ._backend import get_backend, set_backend
from .errors import (
    CapacityError,
    ConvexsimError,
    InputError,
    PreconditionError,
    ProtocolViolationError,
)
from .graphs import (
    CliqueTree,
    Graph,
    build_clique_tree,
    center_of_induced,
    clique_number,
    distances_from,
    expand_clique_tree,
    format_graph_text,
    geodesic_hull,
    is_ptolemaic,
    lexbfs_peo,
    maximal_cliques,
    monophonic_hull,
    parse_graph_text,
)
from .semilattices import (
    Semilattice,
    big_join,
    breadth,
    comparability_graph,
    cycle_free_elimination_order,
    format_semilattice_text,
    height,
    is_cycle_free,
    leq,
    parse_semilattice_text,
)
from .spaces import (
    ALGEBRAIC,
    GEODESIC,
    MONOPHONIC,
    BlockingInstance,
    ConvexitySpace,
    algebraic_space,
    build_blocking_instance,
    geodesic_space,
    monophonic_space,
    verify_blocking_instance,
)
from .protocols import (
    ChordalProtocol,
    LatticeProtocol,
    ProcessorState,
    RoundInbox,
    TreeProtocol,
    ba_total_rounds,
    chordal_step,
    consensus_output,
    lattice_step,
    multivalued_ba,
    safe_area,
    sync_convex_consensus,
    tree_step,
)
from .simulation import (
    Scenario,
    Trace,
    check_round_guarantees,
    derive_rng,
    run_async,
    run_scenario,
    run_sync,
)
from .oracles import (
    OracleReport,
    TraceReport,
    oracle_hull,
    oracle_invariants,
    validate_trace,
)
from .generators import generate_instance
from .scenarios import (
    ScenarioConfig,
    emit_lower_bound_scenario,
    format_config,
    parse_config,
    run_batch,
)

__version__ = "0.1.0"
