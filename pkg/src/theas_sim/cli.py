"""Command-line front end: simulate, compare, replay, validate.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 stats parse
error. Series output is one CSV row per (window, core) with a stable
schema; summaries are flat key=value text files that are always
recomputable from the CSV.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .config import ConfigError, ExperimentConfig, load_config, reference_config_yaml
from .engine import ExperimentResult, compare_runs, run
from .gem5stats import (
    StatsParseError,
    delta_snapshots,
    extract_core_metrics,
    parse_stats_stream,
)
from .power import CurrentTrial, mean_current_delta, measured_power, relative_error
from .scheduler import ResourceLevel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PARSE = 4

CSV_COLUMNS = [
    "time_s",
    "core_id",
    "level",
    "freq_mhz",
    "voltage_v",
    "ipc",
    "miss_rate",
    "fetch_rate",
    "cpu_power_w",
    "l2_power_w",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, rows: Iterable[Sequence], replayed: bool = False) -> None:
    try:
        with open(path, "w", newline="") as fh:
            if replayed:
                fh.write("# replayed=true\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from None


def _write_summary(path: Path, items: list[tuple[str, object]]) -> None:
    try:
        with open(path, "w") as fh:
            for key, value in items:
                fh.write(f"{key}={_fmt(value)}\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from None


def _result_rows(result: ExperimentResult):
    table = result.config.level_table
    s = result.series
    for w in range(s.n_windows):
        t = s.timestamps[w]
        for c in range(s.n_cores):
            level = ResourceLevel(int(s.levels[w, c]))
            point = table[level]
            yield (
                float(t),
                c,
                level.name,
                point.frequency_mhz,
                point.voltage_v,
                float(s.ipc[w, c]),
                float(s.miss_rate[w, c]),
                float(s.fetch_rate[w, c]),
                float(s.cpu_power_w[w, c]),
                float(s.l2_power_w[w, c]),
            )


def _summary_items(result: ExperimentResult, label: str) -> list[tuple[str, object]]:
    cfg = result.config
    items: list[tuple[str, object]] = [
        ("label", label),
        ("seed", cfg.seed),
        ("theas_enabled", cfg.theas_enabled),
        ("decision_polarity", cfg.decision_polarity),
        ("core_count", cfg.core_count),
        ("window_s", cfg.window),
        ("scheduling_period_s", cfg.scheduling_period),
        ("stats_latency_s", cfg.stats_latency),
        ("elapsed_s", result.elapsed_s),
        ("makespan_s", result.makespan_s),
        ("total_energy_j", result.total_energy_j),
        ("average_power_w", result.average_power_w),
        ("transition_count", result.transition_count),
        ("completed_tasks", len(result.completions)),
        ("incomplete_tasks", len(result.incomplete_tasks)),
        ("truncated", result.truncated),
    ]
    for level in ResourceLevel:
        point = cfg.level_table[level]
        items.append((f"level_{level.name}_frequency_mhz", point.frequency_mhz))
        items.append((f"level_{level.name}_voltage_v", point.voltage_v))
    for core, watts in enumerate(result.per_core_average_power_w):
        items.append((f"core{core}_average_power_w", watts))
    return items


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    return out


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    theas = None if args.theas is None else (args.theas == "on")
    sim_config = cfg.sim_config(theas_enabled=theas)
    tasks = cfg.build_tasks()
    result = run(sim_config, tasks)
    out = _out_dir(cfg, args)
    _write_csv(out / "series.csv", _result_rows(result))
    _write_summary(out / "summary.txt", _summary_items(result, "simulate"))
    print(
        f"simulated {result.elapsed_s:.3f} s: average power "
        f"{result.average_power_w:.6f} W, energy {result.total_energy_j:.6f} J, "
        f"makespan {result.makespan_s:.3f} s, "
        f"{result.transition_count} transitions"
    )
    print(f"wrote {out / 'series.csv'} and {out / 'summary.txt'}")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    tasks = cfg.build_tasks()
    theas_result = run(cfg.sim_config(theas_enabled=True), tasks)
    baseline_result = run(cfg.baseline_sim_config(), tasks)
    report = compare_runs(theas_result, baseline_result)
    out = _out_dir(cfg, args)
    _write_csv(out / "theas_series.csv", _result_rows(theas_result))
    _write_csv(out / "baseline_series.csv", _result_rows(baseline_result))
    items: list[tuple[str, object]] = [
        ("baseline_average_power_w", report.baseline_average_power_w),
        ("theas_average_power_w", report.candidate_average_power_w),
        ("improvement_percent", report.improvement_percent),
        ("baseline_makespan_s", report.baseline_makespan_s),
        ("theas_makespan_s", report.candidate_makespan_s),
        ("makespan_ratio", report.makespan_ratio),
        ("baseline_energy_j", report.baseline_energy_j),
        ("theas_energy_j", report.candidate_energy_j),
        ("theas_transitions", report.candidate_transitions),
    ]
    for core, watts in enumerate(report.per_core_baseline_w):
        items.append((f"core{core}_baseline_w", watts))
    for core, watts in enumerate(report.per_core_candidate_w):
        items.append((f"core{core}_theas_w", watts))
    for i, note in enumerate(report.warnings):
        items.append((f"warning_{i}", note))
    _write_summary(out / "comparison.txt", items)
    print(
        f"average dynamic power: baseline {report.baseline_average_power_w:.6f} W, "
        f"theas {report.candidate_average_power_w:.6f} W -> improvement "
        f"{report.improvement_percent:.2f}% "
        f"(makespan ratio {report.makespan_ratio:.4f})"
    )
    return EXIT_OK


def _replay_windows(snapshots):
    """Dump blocks as counter windows: the first block stands alone, the
    rest are differenced against their predecessor."""
    windows = []
    for i, snap in enumerate(snapshots):
        if i == 0:
            windows.append(snap)
        else:
            windows.append(delta_snapshots(snapshots[i - 1], snap))
    return windows


def cmd_replay(cfg: ExperimentConfig, args) -> int:
    stats_path = args.stats or cfg.raw["replay"]["stats_path"]
    if not stats_path:
        raise ConfigError("replay needs a stats file (--stats or replay.stats_path)")
    try:
        text = Path(stats_path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read stats file {stats_path}: {exc}") from None

    diagnostics: list[str] = []
    snapshots = parse_stats_stream(text, diagnostics)
    for note in diagnostics:
        print(note, file=sys.stderr)

    out = _out_dir(cfg, args)
    csv_path = out / "replay_series.csv"
    if not snapshots:
        print("warning: no statistics blocks found; writing empty series",
              file=sys.stderr)
        _write_csv(csv_path, [], replayed=True)
        print(f"wrote {csv_path}")
        return EXIT_OK

    replay_cfg = cfg.raw["replay"]
    core_count = int(replay_cfg["core_count"])
    keymap = cfg.keymap()
    table = cfg.level_table()
    thresholds = cfg.thresholds()
    initial = ResourceLevel[str(replay_cfg["initial_level"]).upper()]
    voltage_override = args.voltage
    if voltage_override is None and replay_cfg["voltage_override_v"] is not None:
        voltage_override = float(replay_cfg["voltage_override_v"])
    polarity = str(cfg.raw["sim"]["decision_polarity"])

    extract_notes: list[str] = []
    try:
        windows = _replay_windows(snapshots)
        extracted = [
            [extract_core_metrics(w, core, keymap, extract_notes) for w in windows]
            for core in range(core_count)
        ]
    except StatsParseError as exc:
        for note in extract_notes:
            print(note, file=sys.stderr)
        raise StatsParseError(f"{stats_path}: {exc}") from None
    for note in extract_notes:
        print(note, file=sys.stderr)

    # advisory level chain per core; decisions are recorded, never fed back
    step = 1 if polarity == "pseudocode" else -1
    rows = []
    n = len(windows)
    for core in range(core_count):
        samples = [s for s, _ in extracted[core]]
        metrics = [m for _, m in extracted[core]]
        decided = kernels.advisory_levels(
            np.array([m.ipc for m in metrics]),
            np.array([m.cache_miss_rate for m in metrics]),
            np.array([m.fetch_rate for m in metrics]),
            int(initial),
            thresholds.ipc_low,
            thresholds.ipc_high,
            thresholds.cache_miss_rate,
            thresholds.fetch_rate,
            promote_step=step,
        )
        # level in force during window i is the decision after window i-1
        in_force = np.concatenate(([int(initial)], decided[:-1]))
        voltages = np.array(
            [
                voltage_override
                if voltage_override is not None
                else table[ResourceLevel(int(l))].voltage_v
                for l in in_force
            ]
        )
        cpu_w = kernels.cpu_power_series(
            voltages,
            np.array([s.ipc for s in samples]),
            np.array([s.dcache_overall_misses for s in samples]),
            np.array([s.sim_seconds for s in samples]),
        )
        l2_w = kernels.l2_power_series(
            np.array([s.l2_overall_accesses for s in samples])
        )
        t = 0.0
        for i in range(n):
            level = ResourceLevel(int(in_force[i]))
            rows.append(
                (
                    float(t),
                    core,
                    level.name,
                    table[level].frequency_mhz,
                    float(voltages[i]),
                    float(samples[i].ipc),
                    float(metrics[i].cache_miss_rate),
                    float(samples[i].fetch_rate),
                    float(cpu_w[i]),
                    float(l2_w[i]),
                )
            )
            t += samples[i].sim_seconds

    rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(csv_path, rows, replayed=True)
    print(
        f"replayed {len(windows)} windows x {core_count} cores from {stats_path}"
    )
    print(f"wrote {csv_path}")
    return EXIT_OK


def _load_trials(path: str) -> list[CurrentTrial]:
    trials: list[CurrentTrial] = []
    try:
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    initial, final = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    continue  # header or stray text
                trials.append(CurrentTrial(initial_amps=initial, final_amps=final))
    except OSError as exc:
        raise OSError(f"cannot read trials file {path}: {exc}") from None
    return trials


def cmd_validate(cfg: ExperimentConfig, args) -> int:
    vcfg = cfg.raw["validate"]
    simulated = args.simulated_watts
    if simulated is None:
        simulated = vcfg["simulated_watts"]
    if simulated is None:
        raise ConfigError("validate needs the simulated average wattage")
    simulated = float(simulated)

    voltage = args.voltage if args.voltage is not None else float(vcfg["supply_voltage_v"])
    override = args.measured_power_override
    if override is None and vcfg["measured_power_override_w"] is not None:
        override = float(vcfg["measured_power_override_w"])
    trials_path = args.trials or vcfg["trials_path"]

    items: list[tuple[str, object]] = [
        ("simulated_watts", simulated),
        ("supply_voltage_v", voltage),
    ]
    if override is not None:
        measured = float(override)
        items.append(("measured_power_source", "override"))
    elif trials_path:
        trials = _load_trials(str(trials_path))
        if not trials:
            raise ConfigError(f"trials file {trials_path} holds no usable rows")
        delta = mean_current_delta(trials)
        measured = measured_power(voltage, delta)
        items.append(("measured_power_source", "trials"))
        items.append(("trial_count", len(trials)))
        items.append(("mean_current_delta_a", delta))
        print(f"mean current delta over {len(trials)} trials: {delta:.6f} A")
    else:
        raise ConfigError(
            "validate needs either --trials or --measured-power-override"
        )
    error = relative_error(simulated, measured)
    items.append(("measured_power_w", measured))
    items.append(("relative_error", error))
    items.append(("relative_error_percent", error * 100.0))

    out = _out_dir(cfg, args)
    _write_summary(out / "validation.txt", items)
    print(
        f"measured power {measured:.6f} W vs simulated {simulated:.6f} W -> "
        f"relative error {error * 100.0:.2f}%"
    )
    print(f"wrote {out / 'validation.txt'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theas-sim",
        description=(
            "Multicore DVFS scheduling and PMC-based power simulator: "
            "run threshold-scheduled experiments, replay gem5 stats "
            "dumps, and validate against hardware measurements."
        ),
    )
    parser.add_argument(
        "--write-reference-config",
        metavar="PATH",
        help="write the full default configuration to PATH and exit",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", metavar="DIR", help="output directory")

    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="run one experiment and write its series")
    p_sim.add_argument("--theas", choices=["on", "off"],
                       help="force the scheduler on or off")

    sub.add_parser("compare", parents=[common],
                   help="run THEAS and the fixed-level baseline on one workload")

    p_rep = sub.add_parser("replay", parents=[common],
                           help="replay a gem5 stats dump through the power model")
    p_rep.add_argument("--stats", metavar="PATH", help="stats.txt-style input file")
    p_rep.add_argument("--voltage", type=float,
                       help="fixed core voltage instead of per-level voltages")

    p_val = sub.add_parser("validate", parents=[common],
                           help="compare a simulated wattage with hardware readings")
    p_val.add_argument("simulated_watts", type=float, nargs="?",
                       help="simulated average power in watts")
    p_val.add_argument("--trials", metavar="PATH",
                       help="CSV of initial,final current readings in amperes")
    p_val.add_argument("--voltage", type=float,
                       help="supply voltage in volts for the trials path")
    p_val.add_argument("--measured-power-override", type=float, metavar="W",
                       help="use this measured wattage instead of trials")

    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "replay": cmd_replay,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.write_reference_config:
        try:
            Path(args.write_reference_config).write_text(reference_config_yaml())
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {args.write_reference_config}")
        return EXIT_OK

    if not args.command:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_CONFIG

    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed

    with warnings.catch_warnings():
        warnings.simplefilter("always")
        try:
            cfg = load_config(args.config, overrides)
            return _COMMANDS[args.command](cfg, args)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except StatsParseError as exc:
            print(f"stats parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        except ValueError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
