"""Synthetic non-pinned workloads and per-window counter synthesis.

Stands in for running real benchmark binaries: each task carries a
behavioral profile (CPU-bound, memory-bound or mixed) that maps its
progress to the counter events the power model and the scheduler read.

The frequency response of a profile is a single memory-wall factor

    factor(f) = f_ref / (f_ref + sensitivity * (f - f_ref))

applied to the profile's nominal IPC. CPU-bound work uses factor 1
regardless of clock; a fully memory-bound profile (sensitivity 1) keeps
a constant instruction throughput while its per-cycle IPC falls as the
clock rises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .power import PmcSample
from .scheduler import OperatingPoint, WorkloadClass

__all__ = [
    "WorkloadClass",
    "WorkloadProfile",
    "TaskSpec",
    "SynthesisParams",
    "frequency_factor",
    "effective_ipc",
    "task_slices",
    "synthesize_pmc",
    "generate_workload",
]


@dataclass(frozen=True)
class WorkloadProfile:
    """Behavioral class plus the constants that generate its counters.

    nominal_ipc is the per-cycle IPC at the reference frequency,
    miss_rate the fraction of data-cache accesses that miss, and
    memory_sensitivity in [0, 1] how strongly rising clocks erode IPC
    (0 = pure compute, 1 = hard memory wall).
    """

    name: str
    workload_class: WorkloadClass
    nominal_ipc: float
    miss_rate: float
    instruction_count: float
    memory_sensitivity: float = 0.0

    def __post_init__(self) -> None:
        if self.instruction_count <= 0:
            raise ValueError(
                f"instruction_count must be > 0, got {self.instruction_count!r}"
            )
        if not (0.0 <= self.miss_rate <= 1.0):
            raise ValueError(f"miss_rate must be in [0, 1], got {self.miss_rate!r}")
        if not (0.0 <= self.memory_sensitivity <= 1.0):
            raise ValueError(
                f"memory_sensitivity must be in [0, 1], got {self.memory_sensitivity!r}"
            )
        if self.nominal_ipc < 0 or not math.isfinite(self.nominal_ipc):
            raise ValueError(f"nominal_ipc must be >= 0, got {self.nominal_ipc!r}")


@dataclass
class TaskSpec:
    """One schedulable unit of work.

    Tasks are never pinned: no core id lives here. Placement is owned by
    the scheduler and may change between cycles.
    """

    task_id: str
    profile: WorkloadProfile
    arrival_time: float = 0.0
    remaining_instructions: float = field(default=-1.0)

    def __post_init__(self) -> None:
        if self.remaining_instructions < 0:
            self.remaining_instructions = self.profile.instruction_count
        if self.remaining_instructions > self.profile.instruction_count:
            raise ValueError(
                "remaining_instructions exceeds the profile instruction count"
            )

    @property
    def done(self) -> bool:
        return self.remaining_instructions <= 0.0


@dataclass(frozen=True)
class SynthesisParams:
    """Calibration constants of the counter synthesis.

    accesses_per_instruction sizes data-cache traffic, fetch_inflation
    the speculative fetch overshoot, noise_amplitude the multiplicative
    observation noise, and l2_accesses_per_miss how many L2 access counts
    one data-cache miss contributes at the scale the L2 power coefficient
    expects.
    """

    reference_frequency_mhz: float = 800.0
    accesses_per_instruction: float = 0.3
    fetch_inflation: float = 1.1
    noise_amplitude: float = 0.02
    l2_accesses_per_miss: float = 0.004

    def __post_init__(self) -> None:
        if self.reference_frequency_mhz <= 0:
            raise ValueError("reference_frequency_mhz must be > 0")
        for name in ("accesses_per_instruction", "fetch_inflation",
                     "l2_accesses_per_miss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (0.0 <= self.noise_amplitude < 1.0):
            raise ValueError("noise_amplitude must be in [0, 1)")


def frequency_factor(profile: WorkloadProfile, frequency_mhz: float,
                     reference_mhz: float) -> float:
    """IPC degradation factor at a clock, relative to the reference clock."""
    if profile.workload_class is WorkloadClass.CPU_BOUND:
        return 1.0
    s = profile.memory_sensitivity
    denom = reference_mhz + s * (frequency_mhz - reference_mhz)
    if denom <= 0.0:
        raise ValueError(
            f"frequency {frequency_mhz} MHz with sensitivity {s} leaves no "
            "positive cycle budget below the reference clock"
        )
    return reference_mhz / denom


def effective_ipc(profile: WorkloadProfile, op: OperatingPoint,
                  params: SynthesisParams) -> float:
    return profile.nominal_ipc * frequency_factor(
        profile, op.frequency_mhz, params.reference_frequency_mhz
    )


def task_slices(tasks: Sequence[TaskSpec], op: OperatingPoint,
                params: SynthesisParams, window: float) -> list[float]:
    """Instructions each task executes in one window under round-robin.

    The window is time-sliced equally across the core's tasks; each
    task's share is capped by its remaining work (leftover slice time is
    not redistributed within the window).
    """
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window!r}")
    if not tasks:
        return []
    slice_seconds = window / len(tasks)
    executed = []
    for task in tasks:
        ipc = effective_ipc(task.profile, op, params)
        capacity = ipc * op.frequency_hz * slice_seconds
        executed.append(min(capacity, max(task.remaining_instructions, 0.0)))
    return executed


def synthesize_pmc(
    tasks: Sequence[TaskSpec],
    op: OperatingPoint,
    params: SynthesisParams,
    window: float,
    rng: np.random.Generator | None = None,
    executed: Sequence[float] | None = None,
) -> PmcSample:
    """Counter events one core would report for one observation window.

    An idle core (no tasks) reports all-zero counters. Noise perturbs
    only the reported values, with a common factor on the throughput
    counters so derived ratios stay consistent, and a separate factor on
    misses clamped so misses never exceed accesses. Pass ``executed`` to
    reuse slices already computed by the engine for work accounting.
    """
    if executed is None:
        executed = task_slices(tasks, op, params, window)
    instructions = math.fsum(executed)
    accesses = params.accesses_per_instruction * instructions
    misses = math.fsum(
        task.profile.miss_rate * params.accesses_per_instruction * done
        for task, done in zip(tasks, executed)
    )

    throughput_noise = 1.0
    miss_noise = 1.0
    if rng is not None and params.noise_amplitude > 0.0:
        a = params.noise_amplitude
        throughput_noise = 1.0 + rng.uniform(-a, a)
        miss_noise = 1.0 + rng.uniform(-a, a)

    instructions_obs = instructions * throughput_noise
    accesses_obs = accesses * throughput_noise
    misses_obs = min(misses * throughput_noise * miss_noise, accesses_obs)
    cycles = op.frequency_hz * window
    return PmcSample(
        ipc=instructions_obs / cycles,
        dcache_overall_misses=misses_obs,
        dcache_overall_accesses=accesses_obs,
        l2_overall_accesses=params.l2_accesses_per_miss * misses_obs,
        fetch_rate=instructions_obs / window * params.fetch_inflation,
        sim_seconds=window,
    )


def generate_workload(
    profile_mix: Sequence[tuple[WorkloadProfile, int]],
    seed: int,
    arrival_spread: float = 0.0,
) -> list[TaskSpec]:
    """Expand a (profile, process count) mix into concrete tasks.

    Deterministic in the seed. Arrival times default to a batch launch at
    t=0; a positive ``arrival_spread`` draws them uniformly from
    [0, spread) instead.
    """
    if not profile_mix:
        raise ValueError("profile_mix must name at least one profile")
    total = sum(count for _, count in profile_mix)
    if total < 1:
        raise ValueError("profile_mix must produce at least one task")
    rng = np.random.default_rng(seed)
    tasks: list[TaskSpec] = []
    counters: dict[str, int] = {}
    for profile, count in profile_mix:
        if count < 0:
            raise ValueError(f"negative process count for profile {profile.name}")
        for _ in range(count):
            seq = counters.get(profile.name, 0)
            counters[profile.name] = seq + 1
            arrival = 0.0
            if arrival_spread > 0.0:
                arrival = float(rng.uniform(0.0, arrival_spread))
            tasks.append(
                TaskSpec(
                    task_id=f"{profile.name}-{seq}",
                    profile=profile,
                    arrival_time=arrival,
                )
            )
    # stable sort: batch arrivals keep the mix order
    tasks.sort(key=lambda t: t.arrival_time)
    return tasks
