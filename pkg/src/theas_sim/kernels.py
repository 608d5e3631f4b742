"""Batch kernels for power evaluation over whole counter series.

Trace replay and series post-processing evaluate the power model over
every recorded window at once. The hot loops live here in two forms: a
numba ``@njit`` build and a pure-numpy build. The numpy build is used
when numba is unavailable or when ``THEAS_SIM_NO_NUMBA`` is set to a
truthy value ("1", "true", "yes", "on"); both builds stay importable
under ``*_numpy`` / ``*_jit`` names so the benchmark and the tests can
compare them directly.

The scalar functions in :mod:`theas_sim.power` remain the reference
implementations; these kernels must agree with them elementwise.
"""

from __future__ import annotations

import os

import numpy as np

from .power import DCACHE_MISS_COEFF, IPC_POWER_FACTOR, L2_ACCESS_COEFF

_ENV_FLAG = "THEAS_SIM_NO_NUMBA"

LOW, MEDIUM, HIGH = 0, 1, 2  # integer level codes used inside kernels


def _numba_disabled_by_env() -> bool:
    return os.environ.get(_ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    njit = None
    _HAVE_NUMBA = False

NUMBA_ENABLED = _HAVE_NUMBA and not _numba_disabled_by_env()


def _f64(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.float64).ravel() for a in arrays)


# ---------------------------------------------------------------------------
# pure-numpy builds
# ---------------------------------------------------------------------------

def cpu_power_series_numpy(voltage, ipc, dcache_misses, sim_seconds):
    """V * (2*ipc + 3e-9 * misses/seconds), elementwise over windows."""
    voltage, ipc, dcache_misses, sim_seconds = _f64(
        voltage, ipc, dcache_misses, sim_seconds
    )
    return voltage * (
        IPC_POWER_FACTOR * ipc + DCACHE_MISS_COEFF * dcache_misses / sim_seconds
    )


def l2_power_series_numpy(l2_accesses):
    """1.8e-5 * accesses, elementwise over windows."""
    (l2_accesses,) = _f64(l2_accesses)
    return L2_ACCESS_COEFF * l2_accesses


def cmos_power_series_numpy(activity, capacitance, voltage, frequency):
    """alpha * C * V^2 * f, elementwise."""
    activity, capacitance, voltage, frequency = _f64(
        activity, capacitance, voltage, frequency
    )
    return activity * capacitance * voltage * voltage * frequency


def supply_power_series_numpy(voltage, current):
    """V * I, elementwise."""
    voltage, current = _f64(voltage, current)
    return voltage * current


# ---------------------------------------------------------------------------
# loop bodies shared by both builds (numba compiles these as-is)
# ---------------------------------------------------------------------------

def _cpu_power_series_loop(voltage, ipc, dcache_misses, sim_seconds):
    n = voltage.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = voltage[i] * (
            IPC_POWER_FACTOR * ipc[i]
            + DCACHE_MISS_COEFF * dcache_misses[i] / sim_seconds[i]
        )
    return out


def _l2_power_series_loop(l2_accesses):
    n = l2_accesses.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = L2_ACCESS_COEFF * l2_accesses[i]
    return out


def _cmos_power_series_loop(activity, capacitance, voltage, frequency):
    n = activity.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = activity[i] * capacitance[i] * voltage[i] * voltage[i] * frequency[i]
    return out


def _supply_power_series_loop(voltage, current):
    n = voltage.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = voltage[i] * current[i]
    return out


def _advisory_levels_loop(ipc, miss_rate, fetch_rate, initial_level,
                          ipc_low, ipc_high, miss_threshold, fetch_threshold,
                          promote_step):
    n = ipc.shape[0]
    out = np.empty(n, dtype=np.int64)
    level = initial_level
    for i in range(n):
        if ipc[i] < ipc_low and miss_rate[i] > miss_threshold:
            level = level + promote_step
        elif ipc[i] > ipc_high and fetch_rate[i] > fetch_threshold:
            level = level - promote_step
        if level < LOW:
            level = LOW
        elif level > HIGH:
            level = HIGH
        out[i] = level
    return out


def _normalize_decision_args(ipc, miss_rate, fetch_rate, initial_level,
                             ipc_low, ipc_high, miss_threshold,
                             fetch_threshold, promote_step):
    ipc, miss_rate, fetch_rate = _f64(ipc, miss_rate, fetch_rate)
    return (ipc, miss_rate, fetch_rate, int(initial_level), float(ipc_low),
            float(ipc_high), float(miss_threshold), float(fetch_threshold),
            int(promote_step))


def advisory_levels_numpy(ipc, miss_rate, fetch_rate, initial_level,
                          ipc_low, ipc_high, miss_threshold, fetch_threshold,
                          promote_step=1):
    """Chain the threshold decision over a window series for one core.

    Returns the level code (0=LOW, 1=MEDIUM, 2=HIGH) in force after each
    window. The recurrence carries the previous level, so this is a
    sequential scan; ``promote_step`` is +1 for the printed decision
    polarity and -1 for the inverted one.
    """
    return _advisory_levels_loop(*_normalize_decision_args(
        ipc, miss_rate, fetch_rate, initial_level, ipc_low, ipc_high,
        miss_threshold, fetch_threshold, promote_step))


if _HAVE_NUMBA:
    _cpu_jit = njit(cache=True)(_cpu_power_series_loop)
    _l2_jit = njit(cache=True)(_l2_power_series_loop)
    _cmos_jit = njit(cache=True)(_cmos_power_series_loop)
    _supply_jit = njit(cache=True)(_supply_power_series_loop)
    _levels_jit = njit(cache=True)(_advisory_levels_loop)

    def cpu_power_series_jit(voltage, ipc, dcache_misses, sim_seconds):
        return _cpu_jit(*_f64(voltage, ipc, dcache_misses, sim_seconds))

    def l2_power_series_jit(l2_accesses):
        return _l2_jit(*_f64(l2_accesses))

    def cmos_power_series_jit(activity, capacitance, voltage, frequency):
        return _cmos_jit(*_f64(activity, capacitance, voltage, frequency))

    def supply_power_series_jit(voltage, current):
        return _supply_jit(*_f64(voltage, current))

    def advisory_levels_jit(ipc, miss_rate, fetch_rate, initial_level,
                            ipc_low, ipc_high, miss_threshold, fetch_threshold,
                            promote_step=1):
        return _levels_jit(*_normalize_decision_args(
            ipc, miss_rate, fetch_rate, initial_level, ipc_low, ipc_high,
            miss_threshold, fetch_threshold, promote_step))


if NUMBA_ENABLED:
    cpu_power_series = cpu_power_series_jit
    l2_power_series = l2_power_series_jit
    cmos_power_series = cmos_power_series_jit
    supply_power_series = supply_power_series_jit
    advisory_levels = advisory_levels_jit
else:
    cpu_power_series = cpu_power_series_numpy
    l2_power_series = l2_power_series_numpy
    cmos_power_series = cmos_power_series_numpy
    supply_power_series = supply_power_series_numpy
    advisory_levels = advisory_levels_numpy
