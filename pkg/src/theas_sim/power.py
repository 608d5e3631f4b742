"""Empirical CPU and L2 power model driven by performance counters.

Every function here is a pure evaluation of one power formula:

* CMOS switching power      alpha * C * V^2 * f
* CPU dynamic power         V * (2 * IPC)            (basic form)
* CPU dynamic power         V * (2 * IPC + 3e-9 * dcache_misses / seconds)
* L2 cache dynamic power    1.8e-5 * sum(overall accesses)
* Supply-side power         V * I

plus the meter-trial averaging used to turn repeated current readings
into one current delta, and the relative-error metric used to compare a
simulated average wattage against a hardware measurement.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

# Model constants. These are fixed coefficients of the empirical model,
# not calibration knobs.
IPC_POWER_FACTOR = 2.0
DCACHE_MISS_COEFF = 3e-9
L2_ACCESS_COEFF = 0.000018

__all__ = [
    "IPC_POWER_FACTOR",
    "DCACHE_MISS_COEFF",
    "L2_ACCESS_COEFF",
    "CmosParams",
    "PmcSample",
    "PowerSample",
    "CurrentTrial",
    "cmos_dynamic_power",
    "cpu_power_basic",
    "cpu_power_full",
    "l2_power",
    "measured_power",
    "mean_current_delta",
    "relative_error",
]


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def _require_nonnegative(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class CmosParams:
    """Inputs of the transistor-level switching power formula.

    activity_factor is the fraction of transistors switching per cycle,
    capacitance is the switched capacitance per cycle in farads, voltage
    in volts, frequency in hertz.
    """

    activity_factor: float
    capacitance: float
    voltage: float
    frequency: float

    def __post_init__(self) -> None:
        _require_nonnegative("activity_factor", self.activity_factor)
        if self.activity_factor > 1.0:
            raise ValueError(
                f"activity_factor must be <= 1, got {self.activity_factor!r}"
            )
        _require_nonnegative("capacitance", self.capacitance)
        _require_nonnegative("voltage", self.voltage)
        _require_nonnegative("frequency", self.frequency)


@dataclass(frozen=True)
class PmcSample:
    """One per-core observation window of performance-counter events.

    Counts are window totals, ipc is instructions per cycle over the
    window, fetch_rate is instructions fetched per second, and
    sim_seconds is the window length in simulated seconds.
    """

    ipc: float
    dcache_overall_misses: float
    dcache_overall_accesses: float
    l2_overall_accesses: float
    fetch_rate: float
    sim_seconds: float

    def __post_init__(self) -> None:
        _require_nonnegative("ipc", self.ipc)
        _require_nonnegative("dcache_overall_misses", self.dcache_overall_misses)
        _require_nonnegative("dcache_overall_accesses", self.dcache_overall_accesses)
        _require_nonnegative("l2_overall_accesses", self.l2_overall_accesses)
        _require_nonnegative("fetch_rate", self.fetch_rate)
        _require_finite("sim_seconds", self.sim_seconds)
        if self.sim_seconds <= 0.0:
            raise ValueError(f"sim_seconds must be > 0, got {self.sim_seconds!r}")
        if self.dcache_overall_misses > self.dcache_overall_accesses:
            raise ValueError(
                "dcache_overall_misses exceeds dcache_overall_accesses "
                f"({self.dcache_overall_misses!r} > {self.dcache_overall_accesses!r})"
            )


@dataclass(frozen=True)
class PowerSample:
    """CPU and L2 dynamic power for one observation window."""

    cpu_dynamic_watts: float
    l2_dynamic_watts: float
    timestamp: float

    def __post_init__(self) -> None:
        _require_nonnegative("cpu_dynamic_watts", self.cpu_dynamic_watts)
        _require_nonnegative("l2_dynamic_watts", self.l2_dynamic_watts)
        _require_finite("timestamp", self.timestamp)

    @property
    def total_watts(self) -> float:
        return self.cpu_dynamic_watts + self.l2_dynamic_watts


@dataclass(frozen=True)
class CurrentTrial:
    """One meter reading pair: current before and after adding load.

    A final reading below the initial one is physically suspect for a
    load-adding trial but real meters fluctuate, so it is kept and only
    warned about; the negative delta enters the mean as-is.
    """

    initial_amps: float
    final_amps: float

    def __post_init__(self) -> None:
        _require_nonnegative("initial_amps", self.initial_amps)
        _require_nonnegative("final_amps", self.final_amps)
        if self.final_amps < self.initial_amps:
            warnings.warn(
                f"final current {self.final_amps} A below initial "
                f"{self.initial_amps} A; keeping negative delta",
                stacklevel=2,
            )

    @property
    def delta_amps(self) -> float:
        return self.final_amps - self.initial_amps


def cmos_dynamic_power(p: CmosParams) -> float:
    """Switching power in watts: alpha * C * V^2 * f."""
    return p.activity_factor * p.capacitance * p.voltage * p.voltage * p.frequency


def cpu_power_basic(voltage: float, ipc: float) -> float:
    """Core dynamic power in watts from voltage and IPC alone: V * 2 * IPC."""
    voltage = _require_nonnegative("voltage", voltage)
    ipc = _require_nonnegative("ipc", ipc)
    return voltage * (IPC_POWER_FACTOR * ipc)


def cpu_power_full(voltage: float, sample: PmcSample) -> float:
    """Core dynamic power in watts including the data-cache miss term.

    Evaluates V * (2 * IPC + 3e-9 * misses / seconds) over one window.
    With zero misses this reduces to cpu_power_basic.
    """
    voltage = _require_nonnegative("voltage", voltage)
    if sample.sim_seconds <= 0.0:
        raise ValueError(f"sim_seconds must be > 0, got {sample.sim_seconds!r}")
    miss_rate = sample.dcache_overall_misses / sample.sim_seconds
    return voltage * (IPC_POWER_FACTOR * sample.ipc + DCACHE_MISS_COEFF * miss_rate)


def l2_power(access_counts: Iterable[float], window_seconds: float = 1.0) -> float:
    """L2 dynamic power in watts: 1.8e-5 times the summed access counts.

    ``access_counts`` holds one overall-access total per L2 instance for
    the observation window. The coefficient implicitly carries the window
    duration, so ``window_seconds`` is accepted only so callers can record
    the window alongside the result; it does not enter the arithmetic.
    """
    _require_finite("window_seconds", window_seconds)
    if window_seconds <= 0.0:
        raise ValueError(f"window_seconds must be > 0, got {window_seconds!r}")
    total = 0.0
    for i, count in enumerate(access_counts):
        total += _require_nonnegative(f"access_counts[{i}]", count)
    return L2_ACCESS_COEFF * total


def measured_power(voltage: float, current: float) -> float:
    """Supply-side power in watts: V * I."""
    voltage = _require_nonnegative("voltage", voltage)
    current = _require_nonnegative("current", current)
    return voltage * current


def mean_current_delta(trials: Sequence[CurrentTrial]) -> float:
    """Arithmetic mean of (final - initial) current over meter trials."""
    if not trials:
        raise ValueError("mean_current_delta needs at least one trial")
    return math.fsum(t.delta_amps for t in trials) / len(trials)


def relative_error(simulated_watts: float, measured_watts: float) -> float:
    """Relative error |simulated - measured| / simulated, as a fraction.

    The simulated value is the denominator; this is the normalization
    that reproduces the reported simulator-vs-hardware error figures.
    """
    simulated_watts = _require_finite("simulated_watts", simulated_watts)
    measured_watts = _require_nonnegative("measured_watts", measured_watts)
    if simulated_watts <= 0.0:
        raise ValueError(
            f"simulated_watts must be > 0, got {simulated_watts!r}"
        )
    return abs(simulated_watts - measured_watts) / simulated_watts
