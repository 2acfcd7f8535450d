"""csafsim <gen|simulate|compare|transient> <config> [--set key=value]...

Exit status: 0 on success, 1 on a configuration error, 2 on an I/O error.
Files from a failed command are removed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from pathlib import Path

from csafsim.config import ExperimentConfig, parse_config
from csafsim.errors import ConfigError, TraceStructureError
from csafsim.metrics import MetricSeries, differential_series, footprint_stats, per_process_counts
from csafsim.simulation import run_simulation, transient_experiment
from csafsim.trace import Branch, Switch, Trace, read_trace_file, write_trace_file
from csafsim.workload import gen_adversarial_pair, interleave, kernel_workload

COMPARE_MODES = (
    ("Baseline", "baseline"),
    ("CSAF", "csaf"),
    ("AlwaysResetSel", "always_reset_selective"),
    ("AlwaysResetFull", "always_reset_full"),
)


@dataclasses.dataclass
class Workload:
    trace: Trace
    names: dict[int, str]
    processes: dict[int, list[Branch]] | None = None


def build_workload(cfg: ExperimentConfig) -> Workload:
    w = cfg.workload
    if w.source == "kernels":
        procs = kernel_workload(w.kernels, dict(w.sizes), cfg.seed)
        traces = {pid: t for pid, (_, t) in procs.items()}
        return Workload(interleave(traces, cfg.slice_len), {pid: n for pid, (n, _) in procs.items()}, traces)
    if w.source == "adversarial":
        a, b = gen_adversarial_pair(w.adversarial, cfg.predictor)
        traces = {1: a, 2: b}
        return Workload(interleave(traces, cfg.slice_len), {1: "A", 2: "B"}, traces)
    trace = read_trace_file(w.trace_path)
    pids = sorted({ev.pid for ev in trace if type(ev) is Switch})
    return Workload(trace, {pid: f"pid{pid}" for pid in pids})


class Outputs:
    """Tracks written files so a failed command can remove them."""

    def __init__(self, directory: str):
        self.dir = Path(directory)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        p = self.dir / name
        self.written.append(p)
        return p

    def csv(self, name: str, header: list[str], rows) -> None:
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def series(self, name: str, s: MetricSeries) -> None:
        self.csv(name, ["index", "rate"], ((i, f"{r:.6f}") for i, r in s.pairs()))

    def discard(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)


def cmd_gen(cfg: ExperimentConfig, out: Outputs) -> None:
    if cfg.workload.source == "trace":
        raise ConfigError("workload.source: gen needs kernels or adversarial, not an existing trace")
    wl = build_workload(cfg)
    for pid, events in wl.processes.items():
        write_trace_file([Switch(pid), *events], out.path(f"{wl.names[pid]}.trace"))
    write_trace_file(wl.trace, out.path("workload.trace"))


def _switch_rows(reports):
    for r in reports:
        if r.noop:
            continue
        from_pid = "" if r.from_pid is None else r.from_pid
        yield r.event, from_pid, r.to_pid, r.observed_changes, int(r.decision), r.reset_count


def cmd_simulate(cfg: ExperimentConfig, out: Outputs) -> None:
    wl = build_workload(cfg)
    res = run_simulation(
        wl.trace, cfg.predictor, cfg.mode, cfg.threshold, cfg.table_capacity, cfg.window, track_footprint=True
    )
    out.series("series.csv", res.series)
    out.csv(
        "per_process.csv",
        ["pid", "branches", "mispredicts", "rate"],
        ((pid, b, m, f"{m / b:.6f}") for pid, (b, m) in per_process_counts(res.records).items()),
    )
    out.csv(
        "switches.csv",
        ["event", "from_pid", "to_pid", "observed_changes", "decision", "reset_count"],
        _switch_rows(res.switches),
    )
    starts = [r for r in res.switches if not r.noop]
    usage = footprint_stats(res.touched, cfg.predictor.tracked_entries)
    out.csv(
        "footprint.csv",
        ["slice", "pid", "event", "usage"],
        ((k, r.to_pid, r.event, f"{u:.6f}") for k, (r, u) in enumerate(zip(starts, usage))),
    )


def cmd_compare(cfg: ExperimentConfig, out: Outputs) -> None:
    wl = build_workload(cfg)
    results = {}
    for _, mode in COMPARE_MODES:
        results[mode] = run_simulation(wl.trace, cfg.predictor, mode, cfg.threshold, cfg.table_capacity, cfg.window)
    counts = {mode: per_process_counts(r.records) for mode, r in results.items()}
    rows = []
    for pid, name in wl.names.items():
        if pid not in counts["baseline"]:
            continue
        row = [name]
        for _, mode in COMPARE_MODES:
            b, m = counts[mode][pid]
            row.append(f"{100 * m / b:.3f}")
        rows.append(row)
    out.csv("table.csv", ["Benchmark"] + [col for col, _ in COMPARE_MODES], rows)
    out.series("differential.csv", differential_series(results["csaf"].series, results["baseline"].series))
    for _, mode in COMPARE_MODES:
        out.series(f"series_{mode}.csv", results[mode].series)


def cmd_transient(cfg: ExperimentConfig, out: Outputs) -> None:
    if cfg.period < cfg.window:
        raise ConfigError(f"transient.period ({cfg.period}) must be >= window ({cfg.window})")
    wl = build_workload(cfg)
    sizes = cfg.transient_sizes or (cfg.predictor.pht_entries,)
    summary, spikes, series = [], [], []
    # History length follows the table size unless it was pinned to something else.
    auto_history = cfg.predictor.history_bits == cfg.predictor.pht_entries.bit_length() - 1
    for size in sizes:
        pcfg = dataclasses.replace(
            cfg.predictor, pht_entries=size, history_bits=None if auto_history else cfg.predictor.history_bits
        )
        for d in cfg.disturbances:
            res = transient_experiment(wl.trace, pcfg, d, cfg.period, cfg.window)
            peaks = [s.peak for s in res.spikes]
            summary.append((size, d, len(res.spikes), f"{res.mean_peak:.6f}", f"{max(peaks, default=0.0):.6f}"))
            for s in res.spikes:
                spikes.append(
                    (size, d, s.disturbance, f"{s.steady:.6f}", f"{s.peak:.6f}", s.peak_index,
                     s.recovery_length, int(s.recovered), s.mispredicts)
                )
            series.append((f"transient_{d}_{size}.csv", res.series))
    out.csv("transient_summary.csv", ["size", "disturbance", "disturbances", "mean_peak", "max_peak"], summary)
    out.csv(
        "transient_spikes.csv",
        ["size", "disturbance", "at", "steady", "peak", "peak_index", "recovery_length", "recovered", "mispredicts"],
        spikes,
    )
    for name, s in series:
        out.series(name, s)


COMMANDS = {"gen": cmd_gen, "simulate": cmd_simulate, "compare": cmd_compare, "transient": cmd_transient}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csafsim", description="Context-switch aware branch prediction experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="flat key = value configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a configuration key (repeatable, applied after the file)")
    return p


def main(argv: list[str] | None = None) -> int:
    out = None
    try:
        args = _parser().parse_args(argv)
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            print(f"csafsim: cannot read config: {e}", file=sys.stderr)
            return 2
        cfg = parse_config(text, args.overrides)
        out = Outputs(os.environ.get("CSAFSIM_OUT") or cfg.output_dir)
        COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        if out:
            out.discard()
        print(f"csafsim: configuration error: {e}", file=sys.stderr)
        return 1
    except (OSError, TraceStructureError) as e:
        if out:
            out.discard()
        print(f"csafsim: I/O error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
