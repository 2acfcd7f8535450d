"""Saturating-counter branch predictors.

Every predictor keeps its direction pattern history tables (PHTs) in one flat
``counters`` list. Choice tables and history registers live elsewhere, so the
flat list is exactly the set of entries the context-switch machinery tracks:
flip detection, inversion and selective reset all address it by index.

Layout of ``counters`` per family (``n = pht_entries``):

    bimodal, gshare, local_two_level   [0, n)   the single PHT
    tournament                         [0, n)   global PHT
                                       [n, 2n)  local PHT
    bimode                             [0, n)   not-taken PHT
                                       [n, 2n)  taken PHT
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from csafsim.errors import BoundsError, ConfigError, ShapeError

FAMILIES = ("bimodal", "gshare", "local_two_level", "tournament", "bimode")

_NO_FLIPS: frozenset[int] = frozenset()


@dataclass(frozen=True)
class SaturatingCounter:
    value: int
    width: int = 2

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("counter width must be >= 1")
        if not 0 <= self.value <= self.maximum:
            raise ValueError(f"counter value {self.value} outside [0, {self.maximum}]")

    @property
    def maximum(self) -> int:
        return (1 << self.width) - 1

    @property
    def taken(self) -> bool:
        """Direction bit: the most significant bit of the value."""
        return bool(self.value >> (self.width - 1))


def counter_update(c: SaturatingCounter, taken: bool) -> tuple[SaturatingCounter, bool]:
    """Step ``c`` toward ``taken``; also report whether the direction bit changed."""
    if taken:
        value = min(c.value + 1, c.maximum)
    else:
        value = max(c.value - 1, 0)
    new = SaturatingCounter(value, c.width)
    return new, new.taken != c.taken


def counter_invert(c: SaturatingCounter) -> SaturatingCounter:
    return SaturatingCounter(c.maximum - c.value, c.width)


@dataclass(frozen=True)
class PredictorConfig:
    family: str = "bimode"
    pht_entries: int = 128
    counter_width: int = 2
    history_bits: int | None = None
    init_value: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"predictor.family: unknown family {self.family!r}, expected one of {', '.join(FAMILIES)}")
        n = self.pht_entries
        if not isinstance(n, int) or n < 1 or n & (n - 1):
            raise ConfigError(f"predictor.pht_entries: {n!r} is not a positive power of two")
        if not 1 <= self.counter_width <= 16:
            raise ConfigError(f"predictor.counter_width: {self.counter_width} not in [1, 16]")
        if self.history_bits is None:
            object.__setattr__(self, "history_bits", n.bit_length() - 1)
        if not 0 <= self.history_bits <= 32:
            raise ConfigError(f"predictor.history_bits: {self.history_bits} not in [0, 32]")
        if not 0 <= self.init_value <= (1 << self.counter_width) - 1:
            raise ConfigError(
                f"predictor.init_value: {self.init_value} does not fit a {self.counter_width}-bit counter"
            )

    @property
    def tracked_entries(self) -> int:
        return self.pht_entries * (2 if self.family in ("tournament", "bimode") else 1)


@dataclass(frozen=True)
class DirectionMap:
    """One direction bit per tracked PHT entry, packed into an int (bit i = entry i)."""

    bits: int
    length: int

    @classmethod
    def zeros(cls, length: int) -> DirectionMap:
        return cls(0, length)

    @classmethod
    def from_counters(cls, counters: list[int], width: int) -> DirectionMap:
        half = 1 << (width - 1)
        bits = 0
        for i, v in enumerate(counters):
            if v >= half:
                bits |= 1 << i
        return cls(bits, len(counters))

    def _check(self, other: DirectionMap) -> None:
        if self.length != other.length:
            raise ShapeError(f"direction maps differ in length: {self.length} vs {other.length}")

    def __xor__(self, other: DirectionMap) -> DirectionMap:
        self._check(other)
        return DirectionMap(self.bits ^ other.bits, self.length)

    def __invert__(self) -> DirectionMap:
        return DirectionMap(~self.bits & ((1 << self.length) - 1), self.length)

    def __getitem__(self, i: int) -> bool:
        if not 0 <= i < self.length:
            raise BoundsError(i)
        return bool(self.bits >> i & 1)

    def __len__(self) -> int:
        return self.length

    def popcount(self) -> int:
        return self.bits.bit_count()

    def indices(self) -> frozenset[int]:
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return frozenset(out)


class Predictor:
    """Common state and bulk hooks; subclasses supply predict/update/touched."""

    family = ""
    direction_tables = 1

    def __init__(self, config: PredictorConfig):
        if config.family != self.family:
            raise ConfigError(f"{type(self).__name__} cannot be built from family {config.family!r}")
        self.config = config
        self._n = config.pht_entries
        self._mask = config.pht_entries - 1
        self._max = (1 << config.counter_width) - 1
        self._half = 1 << (config.counter_width - 1)
        self._hmask = (1 << config.history_bits) - 1
        self.counters = [config.init_value] * (self._n * self.direction_tables)
        self.updates = 0
        self.flips = 0
        self._reset_aux()

    def _reset_aux(self) -> None:
        """Zero history registers and reinitialise choice tables."""

    def _aux_state(self) -> tuple:
        return ()

    @property
    def tracked_entries(self) -> int:
        return len(self.counters)

    def predict(self, pc: int) -> bool:
        raise NotImplementedError

    def update(self, pc: int, taken: bool) -> frozenset[int]:
        raise NotImplementedError

    def touched(self, pc: int) -> tuple[int, ...]:
        """Tracked entries an update at ``pc`` would write, given the current state."""
        raise NotImplementedError

    def _step(self, i: int, taken: bool) -> bool:
        c = self.counters
        v = c[i]
        if taken:
            if v == self._max:
                return False
            c[i] = v + 1
            return v + 1 == self._half
        if v == 0:
            return False
        c[i] = v - 1
        return v == self._half

    def direction_map(self) -> DirectionMap:
        return DirectionMap.from_counters(self.counters, self.config.counter_width)

    def invert_all(self, include_choice: bool = False) -> None:
        """Reflect every tracked direction counter. Choice tables only on request."""
        m = self._max
        self.counters = [m - v for v in self.counters]
        if include_choice and hasattr(self, "choice"):
            self.choice = [m - v for v in self.choice]

    def reset_entries(self, indices: Iterable[int]) -> None:
        indices = list(indices)
        size = len(self.counters)
        for i in indices:
            if not 0 <= i < size:
                raise BoundsError(f"PHT index {i} outside [0, {size})")
        init = self.config.init_value
        for i in indices:
            self.counters[i] = init

    def reset_all(self) -> None:
        self.counters = [self.config.init_value] * len(self.counters)
        self._reset_aux()

    def state(self) -> tuple:
        """Hashable snapshot of every mutable table and register (stats excluded)."""
        return (tuple(self.counters),) + self._aux_state()


class Bimodal(Predictor):
    family = "bimodal"

    def predict(self, pc):
        return self.counters[pc & self._mask] >= self._half

    def touched(self, pc):
        return (pc & self._mask,)

    def update(self, pc, taken):
        i = pc & self._mask
        self.updates += 1
        if self._step(i, taken):
            self.flips += 1
            return frozenset((i,))
        return _NO_FLIPS


class Gshare(Predictor):
    family = "gshare"

    def _reset_aux(self):
        self.ghr = 0

    def _aux_state(self):
        return (self.ghr,)

    def _index(self, pc):
        return (pc ^ self.ghr) & self._mask

    def predict(self, pc):
        return self.counters[self._index(pc)] >= self._half

    def touched(self, pc):
        return (self._index(pc),)

    def update(self, pc, taken):
        i = self._index(pc)
        self.updates += 1
        flipped = self._step(i, taken)
        self.ghr = ((self.ghr << 1) | taken) & self._hmask
        if flipped:
            self.flips += 1
            return frozenset((i,))
        return _NO_FLIPS


class LocalTwoLevel(Predictor):
    """Per-branch history registers (indexed by pc) selecting a shared PHT entry."""

    family = "local_two_level"

    def _reset_aux(self):
        self.local = [0] * self._n

    def _aux_state(self):
        return (tuple(self.local),)

    def predict(self, pc):
        return self.counters[self.local[pc & self._mask] & self._mask] >= self._half

    def touched(self, pc):
        return (self.local[pc & self._mask] & self._mask,)

    def update(self, pc, taken):
        h = pc & self._mask
        i = self.local[h] & self._mask
        self.updates += 1
        flipped = self._step(i, taken)
        self.local[h] = ((self.local[h] << 1) | taken) & self._hmask
        if flipped:
            self.flips += 1
            return frozenset((i,))
        return _NO_FLIPS


class Tournament(Predictor):
    """Global-history PHT and local two-level PHT arbitrated by a global-history choice table.

    A choice counter with its direction bit set selects the global component. Choice
    counters move only when the components disagree, toward the correct one.
    """

    family = "tournament"
    direction_tables = 2

    def _reset_aux(self):
        self.ghr = 0
        self.local = [0] * self._n
        self.choice = [self.config.init_value] * self._n

    def _aux_state(self):
        return (self.ghr, tuple(self.local), tuple(self.choice))

    def _indices(self, pc):
        g = self.ghr & self._mask
        return g, self._n + (self.local[pc & self._mask] & self._mask)

    def predict(self, pc):
        g, loc = self._indices(pc)
        i = g if self.choice[self.ghr & self._mask] >= self._half else loc
        return self.counters[i] >= self._half

    def touched(self, pc):
        return self._indices(pc)

    def update(self, pc, taken):
        g, loc = self._indices(pc)
        c = self.counters
        half = self._half
        global_ok = (c[g] >= half) == taken
        local_ok = (c[loc] >= half) == taken
        ci = self.ghr & self._mask
        if global_ok != local_ok:
            v = self.choice[ci]
            self.choice[ci] = min(v + 1, self._max) if global_ok else max(v - 1, 0)
        self.updates += 1
        flips = []
        if self._step(g, taken):
            flips.append(g)
        if self._step(loc, taken):
            flips.append(loc)
        h = pc & self._mask
        self.local[h] = ((self.local[h] << 1) | taken) & self._hmask
        self.ghr = ((self.ghr << 1) | taken) & self._hmask
        if flips:
            self.flips += len(flips)
            return frozenset(flips)
        return _NO_FLIPS


class BiMode(Predictor):
    """Choice PHT (indexed by pc) picks a taken- or not-taken-biased direction PHT
    (both indexed by pc XOR global history). Only the selected direction counter is
    trained. The choice counter follows the outcome, except when it pointed the
    wrong way but the selected direction counter still predicted correctly.
    """

    family = "bimode"
    direction_tables = 2

    def _reset_aux(self):
        self.ghr = 0
        self.choice = [self.config.init_value] * self._n

    def _aux_state(self):
        return (self.ghr, tuple(self.choice))

    def _selected(self, pc):
        i = (pc ^ self.ghr) & self._mask
        if self.choice[pc & self._mask] >= self._half:
            i += self._n
        return i

    def predict(self, pc):
        return self.counters[self._selected(pc)] >= self._half

    def touched(self, pc):
        return (self._selected(pc),)

    def update(self, pc, taken):
        ci = pc & self._mask
        choice_taken = self.choice[ci] >= self._half
        i = (pc ^ self.ghr) & self._mask
        if choice_taken:
            i += self._n
        correct = (self.counters[i] >= self._half) == taken
        if not (choice_taken != taken and correct):
            v = self.choice[ci]
            self.choice[ci] = min(v + 1, self._max) if taken else max(v - 1, 0)
        self.updates += 1
        flipped = self._step(i, taken)
        self.ghr = ((self.ghr << 1) | taken) & self._hmask
        if flipped:
            self.flips += 1
            return frozenset((i,))
        return _NO_FLIPS


_CLASSES = {cls.family: cls for cls in (Bimodal, Gshare, LocalTwoLevel, Tournament, BiMode)}


def make_predictor(config: PredictorConfig) -> Predictor:
    return _CLASSES[config.family](config)
