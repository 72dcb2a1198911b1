"""Endurance queue: Ackermann-paced queue growth between pipeline stages."""

from .growth import (
    DEFAULT_CAP,
    Decision,
    GrowthTrace,
    MonitorConfig,
    MonitorState,
    Observation,
    SaturatingValue,
    ackermann,
    ackermann_trace,
    init_monitor,
    long_run_growth_index,
    monitor_step,
    quantize_demand,
)
from .heatmap import (
    Anchor,
    HeatMap,
    PlacementPoint,
    build_heatmap,
    check_release,
    export_heatmap,
    overlay_peak_demand,
    select_queue_position,
)
from .kernels import BACKEND
from .metrics import (
    CapacityScore,
    DisjointPartition,
    DomainError,
    StackTotals,
    SystemMetrics,
    aggregate_stack,
    compute_capacity,
    partition_systems,
    utilization_ratio,
)
from .product_form import (
    ProductFormModel,
    SpawnPlan,
    apply_multiprogram,
    build_model,
    dominates,
    enumerate_states,
    normalizing_constant,
    spawn_threads,
    state_probability,
)
from .queue import EnduranceQueue, EnqueueResult, QueueStats, WorkItem, new_queue
from .config import ConfigError, SimConfig, config_from_dict, load_config
from .simulator import SimReport, collect_metrics, compare_baseline, run_simulation
from .workload import EventTrace, WorkloadProfile, generate_workload

__version__ = "0.1.0"
