"""Context-switch bookkeeping and selective PHT resets.

At every switch the framework measures how many tracked PHT entries changed
direction during the outgoing slice, files that count against the transition
that started the slice, and then decides from the incoming transition's
decision counter whether to wipe the entries that changed since the incoming
process last ran.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

from csafsim.errors import ConfigError
from csafsim.predictors import DirectionMap, Predictor, SaturatingCounter, counter_invert

MODES = ("csaf", "baseline", "always_reset_selective", "always_reset_full")

Key = tuple[int, int]


@dataclass
class TransitionEntry:
    last_change_count: int
    decision_counter: int = 0  # 2-bit, starts strongly not-taken

    @property
    def reset(self) -> bool:
        return SaturatingCounter(self.decision_counter, 2).taken


class TransitionTable:
    """Fixed-capacity (from_pid, to_pid) -> TransitionEntry map with LRU eviction.

    Both ``record_outcome`` and ``decide_reset`` count as accesses. A capacity of
    zero stores nothing, so every transition looks like its first occurrence.
    """

    def __init__(self, capacity: int = 64):
        if capacity < 0:
            raise ConfigError("csaf.table_capacity must be >= 0")
        self.capacity = capacity
        self._entries: OrderedDict[Key, TransitionEntry] = OrderedDict()
        self.evicted: list[Key] = []

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def peek(self, key: Key) -> TransitionEntry | None:
        """Look up without touching recency."""
        return self._entries.get(key)

    def recency(self) -> list[Key]:
        """Stored keys, most recently used first."""
        return list(reversed(self._entries))

    def _allocate(self, key: Key, count: int) -> TransitionEntry | None:
        if self.capacity == 0:
            return None
        if len(self._entries) >= self.capacity:
            victim, _ = self._entries.popitem(last=False)
            self.evicted.append(victim)
        entry = self._entries[key] = TransitionEntry(count)
        return entry

    def record_outcome(self, key: Key, observed: int, threshold: float) -> TransitionEntry | None:
        entry = self._entries.get(key)
        if entry is None:
            return self._allocate(key, observed)
        if not math.isinf(threshold) and observed > entry.last_change_count * (1 + threshold):
            entry.decision_counter = counter_invert(SaturatingCounter(entry.decision_counter, 2)).value
        entry.last_change_count = observed
        self._entries.move_to_end(key)
        return entry

    def decide_reset(self, key: Key) -> bool:
        """Whether to wipe on this transition. A miss allocates a fresh entry and answers no."""
        entry = self._entries.get(key)
        if entry is None:
            self._allocate(key, 0)
            return False
        self._entries.move_to_end(key)
        return entry.reset


class SnapshotStore:
    """Per-pid direction map from the end of that pid's latest slice, LRU-bounded."""

    def __init__(self, capacity: int = 64):
        self.capacity = capacity
        self._maps: OrderedDict[int, DirectionMap] = OrderedDict()

    def __len__(self):
        return len(self._maps)

    def __contains__(self, pid):
        return pid in self._maps

    def get(self, pid: int) -> DirectionMap | None:
        m = self._maps.get(pid)
        if m is not None:
            self._maps.move_to_end(pid)
        return m

    def put(self, pid: int, dmap: DirectionMap) -> None:
        if self.capacity == 0:
            return
        if pid in self._maps:
            self._maps.move_to_end(pid)
        elif len(self._maps) >= self.capacity:
            self._maps.popitem(last=False)
        self._maps[pid] = dmap


def slice_change_count(start: DirectionMap, end: DirectionMap) -> int:
    """Number of distinct entries whose direction differs between the two maps."""
    return (start ^ end).popcount()


def changed_since_last_run(snapshots: SnapshotStore, pid: int, current: DirectionMap) -> frozenset[int]:
    snap = snapshots.get(pid)
    if snap is None:
        return frozenset()
    return (snap ^ current).indices()


@dataclass(frozen=True)
class SwitchReport:
    event: int
    from_pid: int | None
    to_pid: int
    observed_changes: int
    decision: bool
    reset_count: int
    noop: bool = False


class CsafState:
    def __init__(
        self,
        tracked_entries: int,
        mode: str = "csaf",
        threshold: float = 0.25,
        capacity: int = 64,
    ):
        if mode not in MODES:
            raise ConfigError(f"csaf.mode: unknown mode {mode!r}, expected one of {', '.join(MODES)}")
        if math.isnan(threshold) or threshold < 0:
            raise ConfigError("csaf.threshold must be >= 0")
        self.mode = mode
        self.threshold = threshold
        self.table = TransitionTable(capacity)
        self.snapshots = SnapshotStore(capacity)
        self.current_pid: int | None = None
        self.previous_pid: int | None = None
        self.slice_start_map = DirectionMap.zeros(tracked_entries)

    def on_context_switch(self, predictor: Predictor, next_pid: int, event: int = 0) -> SwitchReport:
        if next_pid == self.current_pid:
            return SwitchReport(event, self.current_pid, next_pid, 0, False, 0, noop=True)

        if self.current_pid is None:
            # Very first switch: nothing ran yet, so there is nothing to measure or wipe.
            self.current_pid = next_pid
            self.slice_start_map = predictor.direction_map()
            return SwitchReport(event, None, next_pid, 0, False, 0)

        end_map = predictor.direction_map()
        observed = slice_change_count(self.slice_start_map, end_map)
        if self.previous_pid is not None:
            self.table.record_outcome((self.previous_pid, self.current_pid), observed, self.threshold)
        self.snapshots.put(self.current_pid, end_map)

        decision = False
        reset_count = 0
        if self.mode == "csaf":
            decision = self.table.decide_reset((self.current_pid, next_pid))
            if decision:
                wipe = changed_since_last_run(self.snapshots, next_pid, end_map)
                predictor.reset_entries(wipe)
                reset_count = len(wipe)
        elif self.mode == "always_reset_selective":
            decision = True
            wipe = changed_since_last_run(self.snapshots, next_pid, end_map)
            predictor.reset_entries(wipe)
            reset_count = len(wipe)
        elif self.mode == "always_reset_full":
            decision = True
            predictor.reset_all()
            reset_count = predictor.tracked_entries

        report = SwitchReport(event, self.current_pid, next_pid, observed, decision, reset_count)
        self.previous_pid = self.current_pid
        self.current_pid = next_pid
        self.slice_start_map = predictor.direction_map()
        return report
