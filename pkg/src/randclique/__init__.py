"""Persistent homology of random clique-complex filtrations.

Sample a uniformly weighted complete graph, build its flag filtration up to
a dimension and weight cap, compute persistence diagrams over a finite
field, and measure maximal multiplicative persistence, rank invariants, and
cross-polytope witness-cycle counts, with a reproducible experiment harness
on top.
"""

from .errors import (
    CapEscalationError,
    CapInsufficientError,
    EmptyHistogramError,
    InvalidParameterError,
    RandcliqueError,
)
from .filtration import (
    EdgeFiltration,
    GraphSnapshot,
    load_edges_csv,
    mix_seed,
    pair_index,
    sample_filtration,
    save_edges_csv,
    snapshot,
)
from .flag import (
    FlagFiltration,
    adaptive_cap,
    build_flag_filtration,
    export_filtration_text,
    simplex_from_rank,
    simplex_rank,
    simplex_value,
)
from .persistence import (
    ESSENTIAL,
    PersistenceDiagram,
    PersistencePair,
    betti_at,
    compute_persistence,
    diagram_to_csv,
    naive_reduction_oracle,
)
from .stats import (
    MaxPersistenceResult,
    RankQuery,
    expected_betti,
    max_persistence,
    rank_invariant,
    reference_scale,
    thresholds,
)
from .crosspoly import (
    CrossPolytopeCount,
    CrossPolytopeWitness,
    WitnessReport,
    check_witness_implies_rank,
    count_cross_polytope_cycles,
    count_cross_polytope_cycles_bruteforce,
    expected_cross_polytope_cycles,
    recheck_witness,
)
from .experiment import (
    ExperimentConfig,
    ExperimentSummary,
    SampleResult,
    compute_with_cap_policy,
    default_p_grid,
    histogram,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "CapEscalationError",
    "CapInsufficientError",
    "CrossPolytopeCount",
    "CrossPolytopeWitness",
    "EdgeFiltration",
    "EmptyHistogramError",
    "ESSENTIAL",
    "ExperimentConfig",
    "ExperimentSummary",
    "FlagFiltration",
    "GraphSnapshot",
    "InvalidParameterError",
    "MaxPersistenceResult",
    "PersistenceDiagram",
    "PersistencePair",
    "RandcliqueError",
    "RankQuery",
    "SampleResult",
    "WitnessReport",
    "adaptive_cap",
    "betti_at",
    "build_flag_filtration",
    "check_witness_implies_rank",
    "compute_persistence",
    "compute_with_cap_policy",
    "count_cross_polytope_cycles",
    "count_cross_polytope_cycles_bruteforce",
    "default_p_grid",
    "diagram_to_csv",
    "expected_betti",
    "expected_cross_polytope_cycles",
    "export_filtration_text",
    "histogram",
    "load_edges_csv",
    "max_persistence",
    "mix_seed",
    "naive_reduction_oracle",
    "pair_index",
    "rank_invariant",
    "recheck_witness",
    "reference_scale",
    "run_experiment",
    "sample_filtration",
    "save_edges_csv",
    "simplex_from_rank",
    "simplex_rank",
    "simplex_value",
    "snapshot",
    "thresholds",
]
