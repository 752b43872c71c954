"""Exact recovery of large clusters in planted-partition graphs.

The pipeline: sample or load a graph, estimate the largest cluster size from
a vertex split, project one split's bi-adjacency columns onto the top left
singular subspace of the other's, grow a ball around a well-placed center,
and confirm the candidate with degree votes. `recursive_cluster` peels
clusters off one at a time; `noisy_clustering` runs the same engine behind a
persistent faulty pairwise oracle with a sublinear query budget.
"""

from ._kernels import active_backend
from .graph import (
    DerivedParams,
    Graph,
    GroundTruth,
    SbmSpec,
    derive_params,
    k_prime_of,
    load_graph,
    load_labels,
    neighbor_count,
    remove_vertices,
    s_bar_of,
    sample_sbm,
    save_graph,
    save_labels,
    sigma_of,
)
from .harness import (
    ExperimentSpec,
    RunReport,
    evaluate_recovery,
    load_specs,
    ml_bruteforce_partition,
    parse_sizes,
    run_suite,
)
from .oracle import FaultyOracle, NoisyConfig, noisy_clustering, query
from .recovery import (
    DegeneratePartitionError,
    RecoveryConfig,
    Thresholds,
    cluster_once,
    empirical_config,
    estimate_size,
    identify_cluster,
    make_config,
    passes_purity_test,
    preprocess,
    prominent_cluster_count,
    recursive_cluster,
    theory_config,
)
from .spectral import (
    BiAdjacency,
    ConvergenceError,
    ProjectionBasis,
    build_biadjacency,
    project_column,
    project_columns,
    singular_values_of_expectation,
    top_left_singular_basis,
)

__version__ = "0.1.0"

__all__ = [
    "BiAdjacency",
    "ConvergenceError",
    "DegeneratePartitionError",
    "DerivedParams",
    "ExperimentSpec",
    "FaultyOracle",
    "Graph",
    "GroundTruth",
    "NoisyConfig",
    "ProjectionBasis",
    "RecoveryConfig",
    "RunReport",
    "SbmSpec",
    "Thresholds",
    "active_backend",
    "build_biadjacency",
    "cluster_once",
    "derive_params",
    "empirical_config",
    "estimate_size",
    "evaluate_recovery",
    "identify_cluster",
    "k_prime_of",
    "load_graph",
    "load_labels",
    "load_specs",
    "make_config",
    "ml_bruteforce_partition",
    "neighbor_count",
    "noisy_clustering",
    "parse_sizes",
    "passes_purity_test",
    "preprocess",
    "project_column",
    "project_columns",
    "prominent_cluster_count",
    "query",
    "recursive_cluster",
    "remove_vertices",
    "run_suite",
    "s_bar_of",
    "sample_sbm",
    "save_graph",
    "save_labels",
    "sigma_of",
    "singular_values_of_expectation",
    "theory_config",
    "top_left_singular_basis",
]
