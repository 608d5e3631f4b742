"""Parsing of gem5-style periodic statistics dumps into counter windows.

A stats file is a sequence of blocks delimited by the exact lines

    ---------- Begin Simulation Statistics ----------
    ---------- End Simulation Statistics ----------

(ten hyphens on each side). Inside a block each non-empty line is
``<key> <value> [# comment]``. Values may be decimal integers, floats or
percentages ("12.34%" parses to 0.1234); "nan"/"inf" values and anything
else unparsable (histogram rows, distributions) are skipped and counted,
never fatal. Diagnostics are reported as ``line:<n> <reason>`` strings.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from .power import PmcSample
from .scheduler import CoreMetrics

BEGIN_DELIMITER = "---------- Begin Simulation Statistics ----------"
END_DELIMITER = "---------- End Simulation Statistics ----------"

SIM_SECONDS_KEY = "simSeconds"

__all__ = [
    "BEGIN_DELIMITER",
    "END_DELIMITER",
    "SIM_SECONDS_KEY",
    "StatsParseError",
    "StatsSnapshot",
    "CoreKeyMap",
    "parse_stats_stream",
    "format_stats_dump",
    "extract_core_metrics",
    "delta_snapshots",
]


class StatsParseError(ValueError):
    """Hard failure while interpreting a stats dump."""


@dataclass
class StatsSnapshot:
    """One delimited dump block: dotted stat keys mapped to numbers.

    ``sim_seconds`` mirrors the block's simSeconds entry (None when the
    block lacks one); ``truncated`` marks a final block whose end
    delimiter was missing.
    """

    index: int
    entries: dict[str, float] = field(default_factory=dict)
    sim_seconds: float | None = None
    truncated: bool = False


def _parse_value(token: str) -> float | None:
    """Numeric value for a stats token, or None for nan/inf/garbage."""
    text = token
    percent = text.endswith("%")
    if percent:
        text = text[:-1]
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value / 100.0 if percent else value


def parse_stats_stream(
    stream: str | TextIO | Iterable[str],
    diagnostics: list[str] | None = None,
) -> list[StatsSnapshot]:
    """Split a stats dump into snapshots, one per delimited block.

    ``diagnostics`` (optional) collects one ``line:<n> <reason>`` string
    per skipped or suspicious line. Zero blocks parse to an empty list;
    an unterminated final block is returned with ``truncated=True``.
    """
    if isinstance(stream, str):
        lines: Iterable[str] = stream.splitlines()
    else:
        lines = stream

    def note(lineno: int, reason: str) -> None:
        if diagnostics is not None:
            diagnostics.append(f"line:{lineno} {reason}")

    snapshots: list[StatsSnapshot] = []
    current: StatsSnapshot | None = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if line == BEGIN_DELIMITER:
            if current is not None:
                note(lineno, "begin delimiter inside open block; starting new block")
                current.truncated = True
                _finish(current)
                snapshots.append(current)
            current = StatsSnapshot(index=len(snapshots))
            continue
        if line == END_DELIMITER:
            if current is None:
                note(lineno, "end delimiter without open block; ignored")
                continue
            _finish(current)
            snapshots.append(current)
            current = None
            continue
        if current is None:
            continue  # prose between blocks is not part of any snapshot
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        if len(tokens) != 2:
            note(lineno, f"skipped malformed line ({len(tokens)} fields)")
            continue
        key, value_token = tokens
        value = _parse_value(value_token)
        if value is None:
            note(lineno, f"skipped unparsable value {value_token!r} for {key}")
            continue
        if key in current.entries:
            note(lineno, f"duplicate key {key}; keeping last value")
        current.entries[key] = value

    if current is not None:
        note(0, "unterminated final block; returned as partial snapshot")
        current.truncated = True
        _finish(current)
        snapshots.append(current)
    return snapshots


def _finish(snapshot: StatsSnapshot) -> None:
    snapshot.sim_seconds = snapshot.entries.get(SIM_SECONDS_KEY)


def format_stats_dump(snapshots: Iterable[StatsSnapshot]) -> str:
    """Serialize snapshots back to the dump format.

    Re-parsing the result reproduces the snapshots exactly (floats are
    written with repr, which round-trips).
    """
    out: list[str] = []
    for snap in snapshots:
        out.append(BEGIN_DELIMITER)
        for key, value in snap.entries.items():
            out.append(f"{key} {value!r}")
        out.append(END_DELIMITER)
        out.append("")
    return "\n".join(out)


@dataclass(frozen=True)
class CoreKeyMap:
    """Stat-key templates for the per-core counters the model reads.

    Each template is plain text with an optional ``{core}`` placeholder
    for the core index; no other substitution happens. ``rate_metrics``
    names which of the five metrics are rate-class (sampled, taken from
    the newer dump when differencing) rather than counter-class
    (cumulative, subtracted when differencing).
    """

    ipc: str = "system.cpu{core}.ipc"
    dcache_misses: str = "system.cpu{core}.dcache.overallMisses::total"
    dcache_accesses: str = "system.cpu{core}.dcache.overallAccesses::total"
    fetch_count: str = "system.cpu{core}.fetch.numInsts"
    l2_accesses: str = "system.l2.overallAccesses::total"
    rate_metrics: frozenset[str] = frozenset({"ipc"})

    def resolve(self, metric: str, core_id: int) -> str:
        template: str = getattr(self, metric)
        return template.replace("{core}", str(core_id))

    def is_rate_key(self, key: str) -> bool:
        """Whether a resolved stat key belongs to a rate-class metric."""
        for metric in self.rate_metrics:
            template: str = getattr(self, metric)
            pattern = re.escape(template).replace(re.escape("{core}"), r"\d+")
            if re.fullmatch(pattern, key):
                return True
        return False


def extract_core_metrics(
    snapshot: StatsSnapshot,
    core_id: int,
    keymap: CoreKeyMap | None = None,
    diagnostics: list[str] | None = None,
) -> tuple[PmcSample, CoreMetrics]:
    """Resolve one core's counters out of a snapshot.

    Missing keys default to 0 with one diagnostic each; a missing or
    non-positive simSeconds is a hard error because every downstream
    power expression divides by it.
    """
    keymap = keymap or CoreKeyMap()
    if snapshot.sim_seconds is None or snapshot.sim_seconds <= 0.0:
        raise StatsParseError(
            f"snapshot {snapshot.index}: {SIM_SECONDS_KEY} missing or non-positive"
        )

    def read(metric: str) -> float:
        key = keymap.resolve(metric, core_id)
        if key not in snapshot.entries:
            if diagnostics is not None:
                diagnostics.append(
                    f"snapshot:{snapshot.index} missing key {key}; using 0"
                )
            return 0.0
        return snapshot.entries[key]

    ipc = read("ipc")
    misses = read("dcache_misses")
    accesses = read("dcache_accesses")
    fetch_count = read("fetch_count")
    l2_accesses = read("l2_accesses")
    sim_seconds = snapshot.sim_seconds
    fetch_rate = fetch_count / sim_seconds
    sample = PmcSample(
        ipc=ipc,
        dcache_overall_misses=misses,
        dcache_overall_accesses=accesses,
        l2_overall_accesses=l2_accesses,
        fetch_rate=fetch_rate,
        sim_seconds=sim_seconds,
    )
    metrics = CoreMetrics(
        ipc=ipc,
        cache_miss_rate=CoreMetrics.miss_rate_from_counts(misses, accesses),
        fetch_rate=fetch_rate,
    )
    return sample, metrics


def delta_snapshots(
    a: StatsSnapshot,
    b: StatsSnapshot,
    is_rate_key: Callable[[str], bool] | None = None,
) -> StatsSnapshot:
    """Window between two cumulative dumps.

    Counter-class keys are subtracted entry-wise, rate-class keys are
    taken from ``b``, and sim_seconds becomes the window length. The
    default rate classification treats keys whose last dotted component
    is ``ipc`` as rates; pass a ``CoreKeyMap.is_rate_key`` for a
    configured classification.
    """
    if b.index <= a.index:
        raise StatsParseError(
            f"delta requires b.index > a.index, got {b.index} <= {a.index}"
        )
    if a.sim_seconds is None or b.sim_seconds is None:
        raise StatsParseError("delta requires simSeconds in both snapshots")
    window = b.sim_seconds - a.sim_seconds
    if window <= 0.0:
        raise StatsParseError(
            f"non-positive simSeconds delta {window!r} between dumps "
            f"{a.index} and {b.index}"
        )
    if is_rate_key is None:
        is_rate_key = _default_is_rate_key
    entries: dict[str, float] = {}
    for key, value in b.entries.items():
        if key == SIM_SECONDS_KEY:
            entries[key] = window
        elif is_rate_key(key):
            entries[key] = value
        else:
            entries[key] = value - a.entries.get(key, 0.0)
    out = StatsSnapshot(index=b.index, entries=entries)
    _finish(out)
    return out


def _default_is_rate_key(key: str) -> bool:
    leaf = key.split("::", 1)[0].rsplit(".", 1)[-1]
    return leaf == "ipc"
