"""THEAS threshold state machine and task-to-core placement.

Each core carries one of three resource levels (LOW < MEDIUM < HIGH),
each bound to a frequency/voltage operating point. Once per scheduling
cycle the per-core counter metrics are compared against four fixed
thresholds and the level moves at most one step, saturating at the ends:

    if   ipc < ipc_low  and miss_rate  > miss threshold:  level + 1
    elif ipc > ipc_high and fetch_rate > fetch threshold:  level - 1
    else: unchanged

The first branch is tested first, so inputs satisfying both take it.
``decision_polarity="prose"`` selects the inverted variant in which high
miss rates push a core toward LOW instead; the printed algorithm order
("pseudocode") is the default.

Task placement is non-pinned: tasks carry no core affinity and the
scheduler owns the assignment. CPU-demand tasks prefer the highest-level
core, memory-bound tasks the lowest, with ties broken by fewest assigned
tasks and then by core id.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

__all__ = [
    "ResourceLevel",
    "OperatingPoint",
    "WorkloadClass",
    "Thresholds",
    "CoreMetrics",
    "CoreState",
    "TransitionEvent",
    "DEFAULT_LEVEL_TABLE",
    "DEFAULT_THRESHOLDS",
    "LevelTableError",
    "validate_level_table",
    "decide_level",
    "apply_level",
    "scheduling_cycle",
    "assign_task",
]


class ResourceLevel(enum.IntEnum):
    """Ordered per-core resource level."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2

    def promoted(self) -> "ResourceLevel":
        """One level up, saturating at HIGH."""
        return ResourceLevel(min(self + 1, ResourceLevel.HIGH))

    def demoted(self) -> "ResourceLevel":
        """One level down, saturating at LOW."""
        return ResourceLevel(max(self - 1, ResourceLevel.LOW))


class WorkloadClass(enum.Enum):
    """Behavioral demand class a task presents to the placement policy."""

    CPU_BOUND = "cpu_bound"
    MEMORY_BOUND = "memory_bound"
    MIXED = "mixed"


@dataclass(frozen=True)
class OperatingPoint:
    """One DVFS operating point: core clock in MHz and supply voltage."""

    frequency_mhz: float
    voltage_v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.frequency_mhz) and self.frequency_mhz > 0):
            raise ValueError(f"frequency_mhz must be > 0, got {self.frequency_mhz!r}")
        if not (math.isfinite(self.voltage_v) and self.voltage_v > 0):
            raise ValueError(f"voltage_v must be > 0, got {self.voltage_v!r}")

    @property
    def frequency_hz(self) -> float:
        return self.frequency_mhz * 1e6


# The experiments use the 800/1200/1800 MHz clocks; per-level core
# voltages are a documented simulator default, recorded in every output.
DEFAULT_LEVEL_TABLE: Mapping[ResourceLevel, OperatingPoint] = {
    ResourceLevel.LOW: OperatingPoint(frequency_mhz=800.0, voltage_v=0.90),
    ResourceLevel.MEDIUM: OperatingPoint(frequency_mhz=1200.0, voltage_v=1.00),
    ResourceLevel.HIGH: OperatingPoint(frequency_mhz=1800.0, voltage_v=1.10),
}


class LevelTableError(ValueError):
    """Raised for an incomplete or non-monotone level table."""


def validate_level_table(table: Mapping[ResourceLevel, OperatingPoint]) -> None:
    """Check that all three levels exist, with frequency strictly increasing
    and voltage non-decreasing from LOW to HIGH."""
    for level in ResourceLevel:
        if level not in table:
            raise LevelTableError(f"level table is missing {level.name}")
    low, med, high = (table[l] for l in ResourceLevel)
    if not (low.frequency_mhz < med.frequency_mhz < high.frequency_mhz):
        raise LevelTableError("frequency must strictly increase with level")
    if not (low.voltage_v <= med.voltage_v <= high.voltage_v):
        raise LevelTableError("voltage must be non-decreasing with level")


@dataclass(frozen=True)
class Thresholds:
    """The four decision constants of the threshold state machine.

    The defaults put the synthetic CPU-bound, memory-bound and mixed
    workload classes into distinct decision regions; all four values are
    ordinary configuration fields.
    """

    ipc_low: float = 0.4
    ipc_high: float = 1.2
    cache_miss_rate: float = 0.05
    fetch_rate: float = 1e9

    def __post_init__(self) -> None:
        if not (0.0 <= self.ipc_low < self.ipc_high):
            raise ValueError(
                f"need 0 <= ipc_low < ipc_high, got {self.ipc_low!r}, {self.ipc_high!r}"
            )
        if not (0.0 <= self.cache_miss_rate <= 1.0):
            raise ValueError(
                f"cache_miss_rate must be in [0, 1], got {self.cache_miss_rate!r}"
            )
        if self.fetch_rate < 0.0:
            raise ValueError(f"fetch_rate must be >= 0, got {self.fetch_rate!r}")


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class CoreMetrics:
    """Per-core decision inputs extracted from one observation window."""

    ipc: float
    cache_miss_rate: float
    fetch_rate: float

    def __post_init__(self) -> None:
        for name in ("ipc", "cache_miss_rate", "fetch_rate"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if self.cache_miss_rate > 1.0:
            raise ValueError(
                f"cache_miss_rate must be <= 1, got {self.cache_miss_rate!r}"
            )

    @staticmethod
    def miss_rate_from_counts(misses: float, accesses: float) -> float:
        """overall misses / overall accesses, defined as 0 when idle."""
        if accesses <= 0.0:
            return 0.0
        return misses / accesses


@dataclass
class CoreState:
    """Scheduler-owned view of one core.

    ``assigned_tasks`` is an ordered collection of task identifiers; a
    task id appears on at most one core system-wide. The operating point
    always equals the level table entry for ``current_level``.
    """

    core_id: int
    current_level: ResourceLevel
    operating_point: OperatingPoint
    assigned_tasks: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class TransitionEvent:
    """One recorded level change for one core at one scheduling cycle."""

    core_id: int
    old_level: ResourceLevel
    new_level: ResourceLevel
    timestamp: float


def decide_level(
    metrics: CoreMetrics,
    current: ResourceLevel,
    t: Thresholds,
    polarity: str = "pseudocode",
) -> ResourceLevel:
    """Evaluate the threshold rules for one core and return the new level.

    Pure function of its inputs. The first branch (low IPC with a high
    miss rate) wins when both branches hold; results saturate at LOW and
    HIGH. ``polarity="prose"`` inverts the direction of both branches for
    sensitivity experiments.
    """
    if polarity not in ("pseudocode", "prose"):
        raise ValueError(f"unknown decision polarity {polarity!r}")
    step = 1 if polarity == "pseudocode" else -1
    if metrics.ipc < t.ipc_low and metrics.cache_miss_rate > t.cache_miss_rate:
        raw = current + step
    elif metrics.ipc > t.ipc_high and metrics.fetch_rate > t.fetch_rate:
        raw = current - step
    else:
        return current
    return ResourceLevel(min(max(raw, ResourceLevel.LOW), ResourceLevel.HIGH))


def apply_level(
    core: CoreState,
    level: ResourceLevel,
    table: Mapping[ResourceLevel, OperatingPoint],
) -> tuple[CoreState, bool]:
    """Move a core to ``level`` using the operating points in ``table``.

    Returns ``(core, transitioned)``. When the level already matches the
    core's current one this is a no-op returning the input unchanged with
    ``transitioned=False``; otherwise a new state is returned carrying the
    table's operating point for the level.
    """
    if level == core.current_level:
        return core, False
    try:
        point = table[level]
    except KeyError:
        raise LevelTableError(f"level table is missing {level.name}") from None
    return replace(core, current_level=level, operating_point=point), True


def scheduling_cycle(
    cores: Sequence[CoreState],
    metrics: Sequence[CoreMetrics],
    t: Thresholds,
    table: Mapping[ResourceLevel, OperatingPoint],
    timestamp: float = 0.0,
    polarity: str = "pseudocode",
) -> tuple[list[CoreState], list[TransitionEvent]]:
    """Run one decision cycle over every core independently.

    Takes one metrics entry per core, applies decide_level followed by
    apply_level, and returns the updated cores plus one transition event
    per core whose level changed.
    """
    if len(cores) != len(metrics):
        raise ValueError(
            f"got {len(metrics)} metrics entries for {len(cores)} cores"
        )
    updated: list[CoreState] = []
    events: list[TransitionEvent] = []
    for core, m in zip(cores, metrics):
        new_level = decide_level(m, core.current_level, t, polarity=polarity)
        new_core, transitioned = apply_level(core, new_level, table)
        if transitioned:
            events.append(
                TransitionEvent(
                    core_id=core.core_id,
                    old_level=core.current_level,
                    new_level=new_level,
                    timestamp=timestamp,
                )
            )
        updated.append(new_core)
    return updated, events


# Placement preference per demand class: CPU-bound work chases the
# fastest core, memory-bound work the slowest, mixed work the middle
# (nearest level wins, lower level on equal distance).
def _placement_key(core: CoreState, klass: WorkloadClass) -> tuple:
    if klass is WorkloadClass.CPU_BOUND:
        level_pref = -int(core.current_level)
    elif klass is WorkloadClass.MEMORY_BOUND:
        level_pref = int(core.current_level)
    else:
        level_pref = (
            abs(int(core.current_level) - int(ResourceLevel.MEDIUM)),
            int(core.current_level),
        )
    return (level_pref, len(core.assigned_tasks), core.core_id)


def assign_task(task, cores: Sequence[CoreState]) -> int:
    """Pick the core id for a non-pinned task.

    ``task`` needs a ``profile.workload_class`` attribute. The choice is
    total and deterministic: class preference on level first, then fewest
    assigned tasks, then lowest core id.
    """
    if not cores:
        raise ValueError("assign_task needs at least one core")
    klass = task.profile.workload_class
    if not isinstance(klass, WorkloadClass):
        klass = WorkloadClass(klass)
    best = min(cores, key=lambda c: _placement_key(c, klass))
    return best.core_id
