"""Count-Min, Fair-Count-Min and Row-Partitioning sketches.

All three share a ``d x w`` grid of 64-bit counters and a set of ``d`` row
hashers derived from one master seed.  They differ only in which counters an
update for a given element touches:

* ``CountMinSketch``: one counter per row, anywhere in ``[0, w)``.
* ``FairCountMinSketch``: one counter per row, restricted to the column range
  reserved for the element's group.
* ``RowPartitionSketch``: one counter in each row owned by the element's
  group, anywhere in ``[0, w)``.

Instances are single-writer; once updates stop they can be read from any
number of threads.  Nothing here locks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, Sequence

import numpy as np

from .errors import CounterOverflowError
from .hashing import Key, RowHasher, as_key, derive_seeds, fingerprint

_MASK128 = (1 << 128) - 1

MAX_COUNTER = (1 << 64) - 1


@dataclass(frozen=True)
class SketchConfig:
    width: int
    depth: int
    master_seed: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if not 0 <= self.master_seed <= MAX_COUNTER:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ColumnLayout:
    """Disjoint, contiguous column ranges, one per group.

    Group ``g`` owns columns ``[offsets[g], offsets[g] + widths[g])``.
    """

    widths: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False)

    def __init__(self, widths: Sequence[int]):
        widths = tuple(int(x) for x in widths)
        if not widths:
            raise ValueError("layout needs at least one group")
        if any(x < 1 for x in widths):
            raise ValueError(f"every group needs at least one column, got {list(widths)}")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "offsets", (0, *accumulate(widths[:-1])))

    @property
    def total_width(self) -> int:
        return sum(self.widths)

    @property
    def num_groups(self) -> int:
        return len(self.widths)

    def column_range(self, group: int) -> range:
        lo = self.offsets[group]
        return range(lo, lo + self.widths[group])


def _check_count(c: int) -> int:
    c = int(c)
    if c < 1:
        raise ValueError(f"update count must be >= 1, got {c}")
    return c


class _Sketch:
    """Counter grid and row hashers shared by every variant."""

    def __init__(self, config: SketchConfig):
        self.config = config
        self.hashers = [RowHasher(s) for s in derive_seeds(config.master_seed, config.depth)]
        self.counters = [[0] * config.width for _ in range(config.depth)]

    @property
    def width(self) -> int:
        return self.config.width

    @property
    def depth(self) -> int:
        return self.config.depth

    def as_array(self) -> np.ndarray:
        return np.array(self.counters, dtype=np.uint64)

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.counters]

    def _add(self, row: list[int], col: int, c: int) -> None:
        v = row[col] + c
        if v > MAX_COUNTER:
            raise CounterOverflowError(f"counter at column {col} would exceed 2**64 - 1")
        row[col] = v

    def _row_params(self) -> list[tuple[int, int, list[int]]]:
        return [(h.a, h.b, row) for h, row in zip(self.hashers, self.counters)]


def _as_list(values) -> list:
    return values.tolist() if isinstance(values, np.ndarray) else list(values)


def _overflow(col: int) -> CounterOverflowError:
    return CounterOverflowError(f"counter at column {col} would exceed 2**64 - 1")


class CountMinSketch(_Sketch):
    """Standard Count-Min sketch."""

    def __init__(self, width: int, depth: int, seed: int = 0):
        super().__init__(SketchConfig(width, depth, seed))

    def columns(self, key: Key) -> list[int]:
        """Column hit in each row by ``key``."""
        fp = fingerprint(key)
        w = self.config.width
        return [h.hash_fingerprint(fp) % w for h in self.hashers]

    def update(self, key: Key, count: int = 1) -> None:
        c = _check_count(count)
        fp = fingerprint(key)
        w = self.config.width
        for h, row in zip(self.hashers, self.counters):
            self._add(row, h.hash_fingerprint(fp) % w, c)

    def estimate(self, key: Key) -> int:
        fp = fingerprint(key)
        w = self.config.width
        return min(row[h.hash_fingerprint(fp) % w] for h, row in zip(self.hashers, self.counters))

    def update_many(self, keys: Iterable[Key], counts: Iterable[int]) -> None:
        """Bulk ``update``; same result as calling it once per pair."""
        params = self._row_params()
        w = self.config.width
        for k, c in zip(keys, _as_list(counts)):
            c = _check_count(c)
            fp = fingerprint(k)
            for a, b, row in params:
                col = (((a * fp + b) & _MASK128) >> 64) % w
                v = row[col] + c
                if v > MAX_COUNTER:
                    raise _overflow(col)
                row[col] = v

    def estimate_many(self, keys: Iterable[Key]) -> np.ndarray:
        params = self._row_params()
        w = self.config.width
        out = []
        for k in keys:
            fp = fingerprint(k)
            out.append(min(row[(((a * fp + b) & _MASK128) >> 64) % w] for a, b, row in params))
        return np.array(out, dtype=np.int64)


class FairCountMinSketch(_Sketch):
    """Count-Min with group-aware semi-uniform hashing.

    Every row is split into the column ranges of ``layout``; an element of
    group ``g`` is hashed uniformly into ``g``'s range only, so elements of
    different groups never share a counter.

    The caller must always present an element with the same group.  This is
    not checked.
    """

    def __init__(self, layout: ColumnLayout | Sequence[int], depth: int, seed: int = 0):
        if not isinstance(layout, ColumnLayout):
            layout = ColumnLayout(layout)
        super().__init__(SketchConfig(layout.total_width, depth, seed))
        self.layout = layout

    def _span(self, group: int) -> tuple[int, int]:
        if not 0 <= group < self.layout.num_groups:
            raise IndexError(f"group {group} out of range [0, {self.layout.num_groups})")
        return self.layout.offsets[group], self.layout.widths[group]

    def columns(self, key: Key, group: int) -> list[int]:
        off, wg = self._span(group)
        fp = fingerprint(key)
        return [off + h.hash_fingerprint(fp) % wg for h in self.hashers]

    def update(self, key: Key, group: int, count: int = 1) -> None:
        off, wg = self._span(group)
        c = _check_count(count)
        fp = fingerprint(key)
        for h, row in zip(self.hashers, self.counters):
            self._add(row, off + h.hash_fingerprint(fp) % wg, c)

    def estimate(self, key: Key, group: int) -> int:
        off, wg = self._span(group)
        fp = fingerprint(key)
        return min(
            row[off + h.hash_fingerprint(fp) % wg] for h, row in zip(self.hashers, self.counters)
        )

    def update_many(self, keys, groups, counts) -> None:
        """Bulk ``update``; same result as calling it once per triple."""
        params = self._row_params()
        spans = [self._span(g) for g in range(self.layout.num_groups)]
        for k, g, c in zip(keys, _as_list(groups), _as_list(counts)):
            off, wg = spans[g] if 0 <= g < len(spans) else self._span(g)
            c = _check_count(c)
            fp = fingerprint(k)
            for a, b, row in params:
                col = off + (((a * fp + b) & _MASK128) >> 64) % wg
                v = row[col] + c
                if v > MAX_COUNTER:
                    raise _overflow(col)
                row[col] = v

    def estimate_many(self, keys, groups) -> np.ndarray:
        params = self._row_params()
        spans = [self._span(g) for g in range(self.layout.num_groups)]
        out = []
        for k, g in zip(keys, _as_list(groups)):
            off, wg = spans[g] if 0 <= g < len(spans) else self._span(g)
            fp = fingerprint(k)
            out.append(
                min(row[off + (((a * fp + b) & _MASK128) >> 64) % wg] for a, b, row in params)
            )
        return np.array(out, dtype=np.int64)


class RowPartitionSketch(_Sketch):
    """Baseline that gives each group exclusive, full-width rows.

    Group ``g`` owns ``row_alloc[g]`` consecutive rows; its estimate is the
    minimum over those rows only.
    """

    def __init__(self, width: int, row_alloc: Sequence[int], seed: int = 0):
        row_alloc = tuple(int(x) for x in row_alloc)
        if not row_alloc or any(x < 1 for x in row_alloc):
            raise ValueError(f"every group needs at least one row, got {list(row_alloc)}")
        super().__init__(SketchConfig(width, sum(row_alloc), seed))
        self.row_alloc = row_alloc
        self.row_offsets = (0, *accumulate(row_alloc[:-1]))

    def rows_of(self, group: int) -> range:
        if not 0 <= group < len(self.row_alloc):
            raise IndexError(f"group {group} out of range [0, {len(self.row_alloc)})")
        lo = self.row_offsets[group]
        return range(lo, lo + self.row_alloc[group])

    def update(self, key: Key, group: int, count: int = 1) -> None:
        rows = self.rows_of(group)
        c = _check_count(count)
        fp = fingerprint(key)
        w = self.config.width
        for i in rows:
            self._add(self.counters[i], self.hashers[i].hash_fingerprint(fp) % w, c)

    def estimate(self, key: Key, group: int) -> int:
        rows = self.rows_of(group)
        fp = fingerprint(key)
        w = self.config.width
        return min(self.counters[i][self.hashers[i].hash_fingerprint(fp) % w] for i in rows)

    def update_many(self, keys, groups, counts) -> None:
        for k, g, c in zip(keys, _as_list(groups), _as_list(counts)):
            self.update(k, g, c)

    def estimate_many(self, keys, groups) -> np.ndarray:
        return np.array([self.estimate(k, g) for k, g in zip(keys, _as_list(groups))], dtype=np.int64)


__all__ = [
    "ColumnLayout",
    "CountMinSketch",
    "FairCountMinSketch",
    "MAX_COUNTER",
    "RowPartitionSketch",
    "SketchConfig",
    "as_key",
]
