"""Desk-scale multicore DVFS scheduling and PMC-based power simulator.

Combines a threshold-driven per-core resource-level scheduler (THEAS),
an empirical counter-based power model, synthetic non-pinned workloads,
and replay of gem5-style statistics dumps.
"""

from .power import (
    CmosParams,
    CurrentTrial,
    PmcSample,
    PowerSample,
    cmos_dynamic_power,
    cpu_power_basic,
    cpu_power_full,
    l2_power,
    mean_current_delta,
    measured_power,
    relative_error,
)
from .scheduler import (
    CoreMetrics,
    CoreState,
    DEFAULT_LEVEL_TABLE,
    DEFAULT_THRESHOLDS,
    OperatingPoint,
    ResourceLevel,
    Thresholds,
    TransitionEvent,
    WorkloadClass,
    apply_level,
    assign_task,
    decide_level,
    scheduling_cycle,
)
from .workload import (
    SynthesisParams,
    TaskSpec,
    WorkloadProfile,
    generate_workload,
    synthesize_pmc,
)
from .engine import (
    ComparisonReport,
    ExperimentResult,
    SimConfig,
    compare_runs,
    improvement_percent,
    run,
    step,
)
from .gem5stats import (
    CoreKeyMap,
    StatsSnapshot,
    delta_snapshots,
    extract_core_metrics,
    format_stats_dump,
    parse_stats_stream,
)

__version__ = "0.1.0"
