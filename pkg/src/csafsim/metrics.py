"""Misprediction measurements over simulation records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from csafsim.errors import ConfigError


class SimRecord(NamedTuple):
    index: int
    pid: int
    predicted: bool
    actual: bool

    @property
    def correct(self) -> bool:
        return self.predicted == self.actual


class RecordLog:
    """Column store of SimRecords; record ``i`` is the i-th branch of the run."""

    def __init__(self, pid, predicted, actual):
        self.pid = np.asarray(pid, dtype=np.int64)
        self.predicted = np.asarray(predicted, dtype=bool)
        self.actual = np.asarray(actual, dtype=bool)
        if not len(self.pid) == len(self.predicted) == len(self.actual):
            raise ValueError("record columns differ in length")

    @classmethod
    def from_records(cls, records: Iterable[SimRecord]) -> RecordLog:
        records = list(records)
        return cls([r.pid for r in records], [r.predicted for r in records], [r.actual for r in records])

    @property
    def correct(self) -> np.ndarray:
        return self.predicted == self.actual

    @property
    def mispredicted(self) -> np.ndarray:
        return self.predicted != self.actual

    def __len__(self):
        return len(self.pid)

    def __iter__(self):
        for i, (pid, p, a) in enumerate(zip(self.pid.tolist(), self.predicted.tolist(), self.actual.tolist())):
            yield SimRecord(i, pid, p, a)

    def __eq__(self, other):
        if not isinstance(other, RecordLog):
            return NotImplemented
        return (
            np.array_equal(self.pid, other.pid)
            and np.array_equal(self.predicted, other.predicted)
            and np.array_equal(self.actual, other.actual)
        )


def _as_log(records) -> RecordLog:
    return records if isinstance(records, RecordLog) else RecordLog.from_records(records)


@dataclass(frozen=True, eq=False)
class MetricSeries:
    index: np.ndarray
    rate: np.ndarray
    window: int

    def __len__(self):
        return len(self.index)

    def __eq__(self, other):
        if not isinstance(other, MetricSeries):
            return NotImplemented
        return (
            self.window == other.window
            and np.array_equal(self.index, other.index)
            and np.array_equal(self.rate, other.rate)
        )

    def at(self, i: int) -> float:
        pos = np.searchsorted(self.index, i)
        if pos == len(self.index) or self.index[pos] != i:
            raise KeyError(i)
        return float(self.rate[pos])

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.index.tolist(), self.rate.tolist()))


def sliding_window_series(records, window: int = 1000) -> MetricSeries:
    """Misprediction fraction over the last ``window`` records, once the window is full."""
    if window < 1:
        raise ConfigError("window must be >= 1")
    miss = _as_log(records).mispredicted.astype(np.int64)
    if len(miss) < window:
        return MetricSeries(np.zeros(0, dtype=np.int64), np.zeros(0), window)
    csum = np.concatenate(([0], np.cumsum(miss)))
    counts = csum[window:] - csum[:-window]
    index = np.arange(window - 1, len(miss), dtype=np.int64)
    return MetricSeries(index, counts / window, window)


def per_process_counts(records) -> dict[int, tuple[int, int]]:
    """pid -> (branches, mispredicts), pids in ascending order."""
    log = _as_log(records)
    if not len(log):
        return {}
    pids, inverse = np.unique(log.pid, return_inverse=True)
    branches = np.bincount(inverse)
    misses = np.bincount(inverse, weights=log.mispredicted).astype(np.int64)
    return {int(p): (int(b), int(m)) for p, b, m in zip(pids, branches, misses)}


def per_process_rates(records) -> dict[int, float]:
    return {pid: m / b for pid, (b, m) in per_process_counts(records).items()}


def differential_series(a: MetricSeries, b: MetricSeries) -> MetricSeries:
    """Pointwise ``a - b`` over the indices both series share."""
    if a.window != b.window:
        raise ConfigError(f"cannot subtract series with windows {a.window} and {b.window}")
    common, ia, ib = np.intersect1d(a.index, b.index, assume_unique=True, return_indices=True)
    return MetricSeries(common, a.rate[ia] - b.rate[ib], a.window)


def footprint_stats(touched: Sequence[Iterable[int]], tracked_entries: int) -> list[float]:
    """Fraction of tracked PHT entries used in each slice."""
    return [len(set(t)) / tracked_entries for t in touched]


@dataclass(frozen=True)
class SpikeStats:
    disturbance: int
    steady: float
    peak: float
    peak_index: int
    recovery_length: int
    recovered: bool
    mispredicts: int


def spike_stats(
    series: MetricSeries,
    miss: np.ndarray,
    disturbances: Sequence[int],
    eps: float = 0.02,
) -> list[SpikeStats]:
    """Characterise the response to each disturbance applied just before record ``d``.

    Steady state is the window ending at record ``d - 1``. The segment after a
    disturbance runs to the next one (or the end of the run). Recovery is the
    first point at or after the peak where the rate is back within ``eps`` of
    steady state.
    """
    out = []
    n = len(miss)
    bounds = list(disturbances) + [n]
    for d, end in zip(bounds, bounds[1:]):
        lo = np.searchsorted(series.index, d - 1)
        hi = np.searchsorted(series.index, end - 1, side="right")
        if lo >= len(series.index) or series.index[lo] != d - 1:
            raise ConfigError(f"no full window before disturbance at record {d}")
        seg = series.rate[lo:hi]
        steady = float(seg[0])
        k = int(np.argmax(seg))
        after = np.nonzero(seg[k:] <= steady + eps)[0]
        if len(after):
            recovered = True
            recovery = int(series.index[lo + k + after[0]]) - d
        else:
            recovered = False
            recovery = end - d
        out.append(
            SpikeStats(
                disturbance=d,
                steady=steady,
                peak=float(seg[k]),
                peak_index=int(series.index[lo + k]),
                recovery_length=max(recovery, 0),
                recovered=recovered,
                mispredicts=int(miss[d:end].sum()),
            )
        )
    return out
