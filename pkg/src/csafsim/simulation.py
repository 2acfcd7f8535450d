"""Single-pass trace replay through a predictor, with or without context-switch resets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from csafsim.csaf import CsafState, SwitchReport
from csafsim.errors import ConfigError, TraceStructureError
from csafsim.metrics import MetricSeries, RecordLog, SpikeStats, sliding_window_series, spike_stats
from csafsim.predictors import PredictorConfig, make_predictor
from csafsim.trace import Branch, TraceEvent

DISTURBANCES = ("invert", "reset")


@dataclass
class SimResult:
    records: RecordLog
    series: MetricSeries
    switches: list[SwitchReport]
    touched: list[set[int]] = field(default_factory=list)
    """Tracked PHT entries used in each slice (only with ``track_footprint``)."""


def run_simulation(
    trace: Iterable[TraceEvent],
    predictor: PredictorConfig,
    mode: str = "baseline",
    threshold: float = 0.25,
    capacity: int = 64,
    window: int = 1000,
    track_footprint: bool = False,
) -> SimResult:
    if window < 1:
        raise ConfigError("window must be >= 1")
    pred = make_predictor(predictor)
    csaf = CsafState(pred.tracked_entries, mode=mode, threshold=threshold, capacity=capacity)
    predict = pred.predict
    update = pred.update
    pids: list[int] = []
    predicted = bytearray()
    actual = bytearray()
    switches: list[SwitchReport] = []
    touched: list[set[int]] = []
    current = None
    for ev in trace:
        if type(ev) is Branch:
            if current is None:
                raise TraceStructureError("branch before the first context switch")
            pc, taken = ev
            if track_footprint:
                touched[-1].update(pred.touched(pc))
            predicted.append(predict(pc))
            update(pc, taken)
            actual.append(taken)
            pids.append(current)
        else:
            report = csaf.on_context_switch(pred, ev.pid, event=len(pids))
            switches.append(report)
            if not report.noop:
                current = ev.pid
                if track_footprint:
                    touched.append(set())
    records = RecordLog(pids, np.frombuffer(bytes(predicted), dtype=bool), np.frombuffer(bytes(actual), dtype=bool))
    return SimResult(records, sliding_window_series(records, window), switches, touched)


@dataclass
class TransientResult:
    disturbance: str
    series: MetricSeries
    spikes: list[SpikeStats]
    records: RecordLog

    @property
    def mean_peak(self) -> float:
        return float(np.mean([s.peak for s in self.spikes])) if self.spikes else float("nan")


def transient_experiment(
    trace: Iterable[TraceEvent],
    predictor: PredictorConfig,
    disturbance: str,
    period: int = 10_000,
    window: int = 1000,
    eps: float = 0.02,
    invert_choice: bool = False,
) -> TransientResult:
    """Replay ``trace`` and every ``period`` branches invert or reset the whole predictor.

    Context-switch markers are passed through without touching the predictor.
    ``invert_choice`` extends inversion to choice tables (tournament, bimode).
    """
    if disturbance not in DISTURBANCES:
        raise ConfigError(f"disturbance must be one of {', '.join(DISTURBANCES)}, got {disturbance!r}")
    if window < 1:
        raise ConfigError("window must be >= 1")
    if period < window:
        raise ConfigError(f"period ({period}) must be >= window ({window})")
    pred = make_predictor(predictor)
    if disturbance == "invert":
        def disturb():
            pred.invert_all(include_choice=invert_choice)
    else:
        disturb = pred.reset_all
    pids: list[int] = []
    predicted = bytearray()
    actual = bytearray()
    marks: list[int] = []
    current = None
    n = 0
    for ev in trace:
        if type(ev) is not Branch:
            current = ev.pid
            continue
        if current is None:
            raise TraceStructureError("branch before the first context switch")
        if n and n % period == 0:
            disturb()
            marks.append(n)
        pc, taken = ev
        predicted.append(pred.predict(pc))
        pred.update(pc, taken)
        actual.append(taken)
        pids.append(current)
        n += 1
    records = RecordLog(pids, np.frombuffer(bytes(predicted), dtype=bool), np.frombuffer(bytes(actual), dtype=bool))
    series = sliding_window_series(records, window)
    spikes = spike_stats(series, records.mispredicted, marks, eps)
    return TransientResult(disturbance, series, spikes, records)
