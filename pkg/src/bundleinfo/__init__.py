"""Information flow from bundled time-series histories.

Quantifies how two disjoint groups of variables jointly determine a target
through their recent and distant pasts on a lagged graph: kNN conditional
mutual information estimation, partial information decomposition with
rescaled redundancy, momentary-information-weighted transitive reduction,
and a compact two-stage link-discovery procedure.
"""

__version__ = "0.1.0"

from .analysis import (
    HistoryDecomposition,
    SweepCell,
    SweepConfig,
    analyze_at_lag,
    read_sweep_csv,
    sweep,
    write_sweep_csv,
)
from .discovery import DiscoveryConfig, DiscoveryResult, discover_graph
from .estimators import (
    EstimatorConfig,
    InfoEstimate,
    fp_cmi,
    kl_entropy,
    ksg_mi,
    permutation_pvalue,
)
from .graph_reduction import (
    DistantReduction,
    WeightedUnrolledGraph,
    prune_distant_sources,
    transfer_weight,
    weighted_transitive_reduction,
)
from .pid import PIDInputs, PIDResult, pid_decompose, pid_from_samples
from .synth import (
    LinearVARSpec,
    LogisticNetworkSpec,
    gaussian_info_oracle,
    gen_linear_var,
    gen_logistic_network,
)
from .timeseries import (
    TimeSeriesSet,
    extract_lagged_matrix,
    extract_shared_blocks,
    load_csv,
    save_csv,
    standardize,
)
from .tsgraph import (
    AnalysisNodeSets,
    BundleSpec,
    LaggedEdge,
    LaggedNode,
    Order,
    StationaryGraph,
    compute_node_sets,
    condition_set,
    distant_sources,
    immediate_sources,
    load_graph,
    parents_of,
    save_graph,
    split_by_bundle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
