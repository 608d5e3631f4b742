"""Discrete-time simulation engine.

Time advances in fixed observation windows. Each window every core
synthesizes the counters its current tasks produce, the power model
turns them into per-window CPU and L2 wattages, and completed tasks
leave their cores. On scheduling-cycle boundaries the threshold state
machine re-decides every core's resource level, reading metrics that are
``stats_latency`` seconds old to model the delay between a statistics
dump being written and the scheduler acting on it.

With ``theas_enabled=False`` no decisions run and the cores sit at their
configured fixed levels, which is the comparison baseline (all HIGH by
default).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .power import PmcSample, cpu_power_full, l2_power
from .scheduler import (
    CoreMetrics,
    CoreState,
    OperatingPoint,
    ResourceLevel,
    Thresholds,
    TransitionEvent,
    DEFAULT_LEVEL_TABLE,
    DEFAULT_THRESHOLDS,
    assign_task,
    scheduling_cycle,
    validate_level_table,
)
from .workload import SynthesisParams, TaskSpec, synthesize_pmc, task_slices

__all__ = [
    "SimConfig",
    "SimulationState",
    "SeriesArrays",
    "ExperimentResult",
    "ComparisonReport",
    "SimulationError",
    "step",
    "run",
    "improvement_percent",
    "compare_runs",
]

_TIME_EPS = 1e-9


class SimulationError(RuntimeError):
    """Raised when a run cannot proceed (for example the step cap)."""


@dataclass(frozen=True)
class SimConfig:
    """Everything one experiment run needs besides the task list."""

    core_count: int = 4
    level_table: Mapping[ResourceLevel, OperatingPoint] = field(
        default_factory=lambda: dict(DEFAULT_LEVEL_TABLE)
    )
    thresholds: Thresholds = DEFAULT_THRESHOLDS
    scheduling_period: float = 0.5
    stats_latency: float = 1.0
    window: float = 0.1
    duration: float = 30.0
    seed: int = 0
    theas_enabled: bool = True
    synthesis: SynthesisParams = SynthesisParams()
    initial_levels: tuple[ResourceLevel, ...] | ResourceLevel = ResourceLevel.HIGH
    decision_polarity: str = "pseudocode"
    run_until: str = "completion"
    step_cap: int = 1_000_000

    def __post_init__(self) -> None:
        if self.core_count < 1:
            raise ValueError(f"core_count must be >= 1, got {self.core_count!r}")
        validate_level_table(self.level_table)
        if self.window <= 0 or self.scheduling_period <= 0:
            raise ValueError("window and scheduling_period must be > 0")
        if self.window > self.scheduling_period + _TIME_EPS:
            raise ValueError("window must not exceed scheduling_period")
        ratio = self.scheduling_period / self.window
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError(
                "scheduling_period must be an integer multiple of window; "
                f"got {self.scheduling_period!r} / {self.window!r}"
            )
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration!r}")
        if self.stats_latency < 0:
            raise ValueError("stats_latency must be >= 0")
        if self.run_until not in ("completion", "duration"):
            raise ValueError(f"unknown run_until mode {self.run_until!r}")
        if self.decision_polarity not in ("pseudocode", "prose"):
            raise ValueError(
                f"unknown decision_polarity {self.decision_polarity!r}"
            )
        if self.step_cap < 1:
            raise ValueError("step_cap must be >= 1")

    @property
    def period_windows(self) -> int:
        return int(round(self.scheduling_period / self.window))

    @property
    def reference_frequency_mhz(self) -> float:
        return self.synthesis.reference_frequency_mhz

    def levels_vector(self) -> tuple[ResourceLevel, ...]:
        if isinstance(self.initial_levels, ResourceLevel):
            return (self.initial_levels,) * self.core_count
        levels = tuple(ResourceLevel(l) for l in self.initial_levels)
        if len(levels) != self.core_count:
            raise ValueError(
                f"initial_levels has {len(levels)} entries for "
                f"{self.core_count} cores"
            )
        return levels


@dataclass
class SimulationState:
    """Mutable state of one run between windows."""

    config: SimConfig
    cores: list[CoreState]
    core_tasks: list[list[TaskSpec]]
    pending: list[TaskSpec]
    rng: np.random.Generator
    window_index: int = 0
    transitions: list[TransitionEvent] = field(default_factory=list)
    completions: list[tuple[str, float]] = field(default_factory=list)
    # per-window records, filled by step()
    ipc: list[list[float]] = field(default_factory=list)
    miss_rate: list[list[float]] = field(default_factory=list)
    fetch_rate: list[list[float]] = field(default_factory=list)
    cpu_w: list[list[float]] = field(default_factory=list)
    l2_w: list[list[float]] = field(default_factory=list)
    levels: list[list[int]] = field(default_factory=list)

    @property
    def time(self) -> float:
        return self.window_index * self.config.window

    def all_done(self) -> bool:
        return not self.pending and all(not ts for ts in self.core_tasks)

    def active_task_count(self) -> int:
        return len(self.pending) + sum(len(ts) for ts in self.core_tasks)


def _new_state(config: SimConfig, tasks: Sequence[TaskSpec]) -> SimulationState:
    levels = config.levels_vector()
    cores = [
        CoreState(
            core_id=i,
            current_level=levels[i],
            operating_point=config.level_table[levels[i]],
        )
        for i in range(config.core_count)
    ]
    pending = [
        TaskSpec(
            task_id=t.task_id,
            profile=t.profile,
            arrival_time=t.arrival_time,
            remaining_instructions=t.remaining_instructions,
        )
        for t in tasks
    ]
    pending.sort(key=lambda t: t.arrival_time)
    return SimulationState(
        config=config,
        cores=cores,
        core_tasks=[[] for _ in range(config.core_count)],
        pending=pending,
        rng=np.random.default_rng(config.seed),
    )


def _admit_arrivals(state: SimulationState) -> None:
    now = state.time
    while state.pending and state.pending[0].arrival_time <= now + _TIME_EPS:
        task = state.pending.pop(0)
        core_id = assign_task(task, state.cores)
        state.core_tasks[core_id].append(task)
        state.cores[core_id].assigned_tasks.append(task.task_id)


def _visible_window(state: SimulationState) -> int:
    """Index of the newest window old enough to be visible at this cycle."""
    cfg = state.config
    lag_windows = cfg.stats_latency / cfg.window
    return math.floor(state.window_index - 1 - lag_windows + 1e-6)


def _run_cycle(state: SimulationState) -> None:
    cfg = state.config
    j = _visible_window(state)
    if j < 0 or j >= len(state.ipc):
        return  # nothing old enough to act on yet
    metrics = [
        CoreMetrics(
            ipc=state.ipc[j][core.core_id],
            cache_miss_rate=state.miss_rate[j][core.core_id],
            fetch_rate=state.fetch_rate[j][core.core_id],
        )
        for core in state.cores
    ]
    state.cores, events = scheduling_cycle(
        state.cores,
        metrics,
        cfg.thresholds,
        cfg.level_table,
        timestamp=state.time,
        polarity=cfg.decision_polarity,
    )
    state.transitions.extend(events)


def step(state: SimulationState, dt: float | None = None) -> SimulationState:
    """Advance the simulation by exactly one observation window.

    Mutates and returns ``state``. ``dt``, when given, must equal the
    configured window; the engine has no variable step.
    """
    cfg = state.config
    if dt is not None and abs(dt - cfg.window) > _TIME_EPS:
        raise ValueError(f"step dt must equal the window {cfg.window!r}")

    _admit_arrivals(state)

    window_end = (state.window_index + 1) * cfg.window
    row_ipc: list[float] = []
    row_miss: list[float] = []
    row_fetch: list[float] = []
    row_cpu: list[float] = []
    row_l2: list[float] = []
    row_level: list[int] = []

    for core in state.cores:
        tasks = state.core_tasks[core.core_id]
        executed = task_slices(tasks, core.operating_point, cfg.synthesis, cfg.window)
        sample = synthesize_pmc(
            tasks,
            core.operating_point,
            cfg.synthesis,
            cfg.window,
            rng=state.rng,
            executed=executed,
        )
        cpu_watts = cpu_power_full(core.operating_point.voltage_v, sample)
        l2_watts = l2_power([sample.l2_overall_accesses], cfg.window)
        row_ipc.append(sample.ipc)
        row_miss.append(
            CoreMetrics.miss_rate_from_counts(
                sample.dcache_overall_misses, sample.dcache_overall_accesses
            )
        )
        row_fetch.append(sample.fetch_rate)
        row_cpu.append(cpu_watts)
        row_l2.append(l2_watts)
        row_level.append(int(core.current_level))

        finished = []
        for task, done in zip(tasks, executed):
            task.remaining_instructions -= done
            if task.remaining_instructions <= _TIME_EPS:
                task.remaining_instructions = 0.0
                finished.append(task)
        for task in finished:
            tasks.remove(task)
            core.assigned_tasks.remove(task.task_id)
            state.completions.append((task.task_id, window_end))

    state.ipc.append(row_ipc)
    state.miss_rate.append(row_miss)
    state.fetch_rate.append(row_fetch)
    state.cpu_w.append(row_cpu)
    state.l2_w.append(row_l2)
    state.levels.append(row_level)
    state.window_index += 1

    if cfg.theas_enabled and state.window_index % cfg.period_windows == 0:
        _run_cycle(state)
    return state


@dataclass(frozen=True)
class SeriesArrays:
    """Per-window, per-core record of one run (window-major 2D arrays)."""

    timestamps: np.ndarray  # window start times, shape (n_windows,)
    levels: np.ndarray      # int level codes, shape (n_windows, n_cores)
    ipc: np.ndarray
    miss_rate: np.ndarray
    fetch_rate: np.ndarray
    cpu_power_w: np.ndarray
    l2_power_w: np.ndarray

    @property
    def n_windows(self) -> int:
        return self.timestamps.shape[0]

    @property
    def n_cores(self) -> int:
        return self.levels.shape[1] if self.levels.ndim == 2 else 0


@dataclass(frozen=True)
class ExperimentResult:
    """Series plus aggregates for one run."""

    config: SimConfig
    series: SeriesArrays
    transitions: tuple[TransitionEvent, ...]
    completions: tuple[tuple[str, float], ...]
    incomplete_tasks: tuple[str, ...]
    elapsed_s: float
    makespan_s: float
    total_energy_j: float
    average_power_w: float
    per_core_average_power_w: tuple[float, ...]
    truncated: bool = False

    @property
    def transition_count(self) -> int:
        return len(self.transitions)


def _build_result(state: SimulationState, truncated: bool) -> ExperimentResult:
    cfg = state.config
    n = state.window_index
    timestamps = np.arange(n, dtype=np.float64) * cfg.window
    series = SeriesArrays(
        timestamps=timestamps,
        levels=np.asarray(state.levels, dtype=np.int64).reshape(n, cfg.core_count),
        ipc=np.asarray(state.ipc, dtype=np.float64).reshape(n, cfg.core_count),
        miss_rate=np.asarray(state.miss_rate, dtype=np.float64).reshape(n, cfg.core_count),
        fetch_rate=np.asarray(state.fetch_rate, dtype=np.float64).reshape(n, cfg.core_count),
        cpu_power_w=np.asarray(state.cpu_w, dtype=np.float64).reshape(n, cfg.core_count),
        l2_power_w=np.asarray(state.l2_w, dtype=np.float64).reshape(n, cfg.core_count),
    )
    elapsed = n * cfg.window
    per_core_energy = (
        (series.cpu_power_w + series.l2_power_w).sum(axis=0) * cfg.window
        if n
        else np.zeros(cfg.core_count)
    )
    energy = float(per_core_energy.sum())
    avg_power = energy / elapsed if elapsed > 0 else 0.0
    per_core_avg = tuple(
        float(e / elapsed) if elapsed > 0 else 0.0 for e in per_core_energy
    )
    if state.completions:
        makespan = max(t for _, t in state.completions)
    else:
        makespan = elapsed
    incomplete = tuple(
        t.task_id
        for ts in state.core_tasks
        for t in ts
    ) + tuple(t.task_id for t in state.pending)
    if incomplete:
        makespan = elapsed
    return ExperimentResult(
        config=cfg,
        series=series,
        transitions=tuple(state.transitions),
        completions=tuple(state.completions),
        incomplete_tasks=incomplete,
        elapsed_s=elapsed,
        makespan_s=makespan,
        total_energy_j=energy,
        average_power_w=avg_power,
        per_core_average_power_w=per_core_avg,
        truncated=truncated,
    )


def run(config: SimConfig, tasks: Sequence[TaskSpec]) -> ExperimentResult:
    """Execute one experiment: either until every task completes
    (default) or for the configured duration.

    Deterministic in (config, seed). A hard step cap guards
    non-terminating configurations; hitting it truncates the run with a
    warning instead of looping forever.
    """
    state = _new_state(config, tasks)
    duration_windows = math.ceil(config.duration / config.window - 1e-9)
    truncated = False
    while True:
        if config.run_until == "completion":
            if state.all_done():
                break
        else:
            if state.window_index >= duration_windows:
                break
        if state.window_index >= config.step_cap:
            truncated = True
            warnings.warn(
                f"step cap {config.step_cap} reached with "
                f"{state.active_task_count()} tasks outstanding; truncating run",
                stacklevel=2,
            )
            break
        step(state)
    return _build_result(state, truncated)


def improvement_percent(baseline_watts: float, candidate_watts: float) -> float:
    """(baseline - candidate) / baseline, in percent."""
    if baseline_watts <= 0:
        raise ValueError(
            f"baseline average power must be > 0, got {baseline_watts!r}"
        )
    return (baseline_watts - candidate_watts) / baseline_watts * 100.0


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side aggregate of a candidate run against a baseline."""

    baseline_average_power_w: float
    candidate_average_power_w: float
    improvement_percent: float
    baseline_makespan_s: float
    candidate_makespan_s: float
    makespan_ratio: float
    baseline_energy_j: float
    candidate_energy_j: float
    per_core_baseline_w: tuple[float, ...]
    per_core_candidate_w: tuple[float, ...]
    candidate_transitions: int
    warnings: tuple[str, ...] = ()


def compare_runs(
    candidate: ExperimentResult, baseline: ExperimentResult
) -> ComparisonReport:
    """Compare two runs, normally a THEAS run against a fixed-level one.

    Config mismatches (seed, core count, window) are reported in the
    ``warnings`` field rather than raised: comparing arbitrary runs is
    allowed, it just may not mean much.
    """
    notes: list[str] = []
    if candidate.config.seed != baseline.config.seed:
        notes.append(
            f"seed mismatch: {candidate.config.seed} vs {baseline.config.seed}"
        )
    if candidate.config.core_count != baseline.config.core_count:
        notes.append("core count mismatch")
    if candidate.config.window != baseline.config.window:
        notes.append("window mismatch")
    if candidate.incomplete_tasks or baseline.incomplete_tasks:
        notes.append("one or both runs ended with incomplete tasks")
    if baseline.average_power_w > 0:
        improvement = improvement_percent(
            baseline.average_power_w, candidate.average_power_w
        )
    elif candidate.average_power_w == 0:
        improvement = 0.0
    else:
        improvement = float("nan")
        notes.append("baseline average power is zero; improvement undefined")
    return ComparisonReport(
        baseline_average_power_w=baseline.average_power_w,
        candidate_average_power_w=candidate.average_power_w,
        improvement_percent=improvement,
        baseline_makespan_s=baseline.makespan_s,
        candidate_makespan_s=candidate.makespan_s,
        makespan_ratio=(
            candidate.makespan_s / baseline.makespan_s
            if baseline.makespan_s > 0
            else float("nan")
        ),
        baseline_energy_j=baseline.total_energy_j,
        candidate_energy_j=candidate.total_energy_j,
        per_core_baseline_w=baseline.per_core_average_power_w,
        per_core_candidate_w=candidate.per_core_average_power_w,
        candidate_transitions=candidate.transition_count,
        warnings=tuple(notes),
    )
