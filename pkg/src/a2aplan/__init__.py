"""Planning, costing, verification and simulation of all-to-all collectives
on reconfigurable circuit-switched fabrics."""

from .core import (
    CostModel,
    Flow,
    NetworkParams,
    Path,
    Round,
    Schedule,
    Stage,
    Strategy,
    Topology,
    TopologySequence,
    TrafficMatrix,
    adjacency_matrix,
    strategy_from_json,
    strategy_to_json,
    topology_from_json,
    topology_to_json,
    traffic_from_json,
    traffic_to_json,
    validate_traffic,
)
from .topology import (
    build_circulant,
    build_cycle,
    build_generalized_kautz,
    build_shift_sequence,
    choose_circulant_offsets,
    contract_sequence,
    expansion_profile,
    is_node_symmetric,
)
from .schedule import (
    ContentionReport,
    Relabeling,
    check_contention_free,
    cross_topology_assign,
    merge_rounds,
    relabel_for_sizes,
    schedule_expander,
    schedule_symmetric,
)
from .cost import (
    CostBreakdown,
    lower_bound,
    lower_bound_hop_term,
    power_sum,
    round_duration,
    search_space_size,
    strategy_cost,
    verify_decomposition,
)
from .strategize import (
    DEFAULT_R_GRID,
    PlanRequest,
    PlanResult,
    SweepResult,
    best_strategy_for_d,
    select_d,
    sweep_r,
)
from .baselines import direct_circuits, greedy_bvn, greedy_bvn_strategy, static_shortest_path
from .sim import SimConfig, SimReport, compare_abstract_vs_sim, simulate
from .workloads import WorkloadSpec, gen_traffic

__version__ = "0.1.0"
