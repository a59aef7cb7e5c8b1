"""Synthetic frequency generation, grouping strategies and CSV ingestion."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DatasetError
from .metrics import FrequencyOracle

_FAMILIES = {"zipf": (1, 2), "gaussian": (2, 2), "exponential": (1, 1), "uniform": (2, 2)}

DEFAULT_ZIPF_MEAN = 10.0


@dataclass(frozen=True)
class DistributionSpec:
    """A frequency distribution.

    Families and parameters:

    * ``zipf(s[, mean])``: a stream of ``round(mean * n)`` events is drawn
      with Pr(rank r) proportional to ``r ** -s``; element i has rank i + 1.
      ``mean`` defaults to 10.
    * ``gaussian(mu, sigma)``
    * ``exponential(lam)``: rate ``lam`` (mean ``1 / lam``)
    * ``uniform(a, b)``

    Samples are rounded to the nearest integer and clamped to at least 1.
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown distribution family {self.family!r}")
        lo, hi = _FAMILIES[self.family]
        if not lo <= len(self.params) <= hi:
            raise ValueError(f"{self.family} takes {lo}..{hi} parameters, got {len(self.params)}")
        p = self.params
        if self.family == "zipf" and (p[0] <= 0 or (len(p) > 1 and p[1] <= 0)):
            raise ValueError("zipf needs s > 0 and mean > 0")
        if self.family == "gaussian" and p[1] <= 0:
            raise ValueError("gaussian needs sigma > 0")
        if self.family == "exponential" and p[0] <= 0:
            raise ValueError("exponential needs lambda > 0")
        if self.family == "uniform" and p[0] > p[1]:
            raise ValueError("uniform needs a <= b")

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse ``family:p1,p2`` (e.g. ``gaussian:100,50``)."""
        family, _, rest = text.strip().partition(":")
        try:
            params = tuple(float(x) for x in rest.split(",")) if rest else ()
        except ValueError as exc:
            raise ValueError(f"bad distribution parameters in {text!r}") from exc
        return cls(family.strip().lower(), params)

    def __str__(self):
        return f"{self.family}:" + ",".join(f"{p:g}" for p in self.params)


def gen_frequencies(dist: DistributionSpec, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` positive integer frequencies, deterministic per seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = dist.params
    if dist.family == "zipf":
        mean = p[1] if len(p) > 1 else DEFAULT_ZIPF_MEAN
        weights = np.arange(1, n + 1, dtype=np.float64) ** -p[0]
        counts = rng.multinomial(int(round(mean * n)), weights / weights.sum())
        return np.maximum(counts, 1).astype(np.int64)
    if dist.family == "gaussian":
        raw = rng.normal(p[0], p[1], n)
    elif dist.family == "exponential":
        raw = rng.exponential(1.0 / p[0], n)
    else:
        raw = rng.uniform(p[0], p[1], n)
    return np.maximum(np.rint(raw), 1).astype(np.int64)


def group_by_threshold(freqs, tau: float) -> np.ndarray:
    """Label 0 (low) for ``f < tau``, 1 (high) otherwise."""
    if tau < 0:
        raise ValueError("threshold must be >= 0")
    freqs = np.asarray(freqs)
    labels = (freqs >= tau).astype(np.int64)
    if len(labels) and (labels.min() == labels.max()):
        warnings.warn(f"threshold {tau} leaves one group empty", stacklevel=2)
    return labels


def group_equi_width(freqs, ell: int) -> np.ndarray:
    """Split ``[min f, max f]`` into ``ell`` equal intervals.

    Intervals are half-open on the right except the last, which includes
    ``max f``.  Labels are computed in integer arithmetic.
    """
    if ell < 2:
        raise ValueError("need at least 2 groups")
    freqs = np.asarray(freqs, dtype=np.int64)
    lo, hi = int(freqs.min()), int(freqs.max())
    if lo == hi:
        warnings.warn("all frequencies are equal; only one group is occupied", stacklevel=2)
        return np.zeros(len(freqs), dtype=np.int64)
    labels = (freqs - lo) * ell // (hi - lo)
    return np.minimum(labels, ell - 1)


def group_by_rank(freqs, n_low: int) -> np.ndarray:
    """Label the ``n_low`` least frequent types 0 and the rest 1.

    Equivalent to a threshold cut, but hits ``n_low`` exactly when
    frequencies tie at the cut (ties broken by position).
    """
    freqs = np.asarray(freqs)
    if not 0 < n_low < len(freqs):
        raise ValueError(f"n_low must be in (0, {len(freqs)}), got {n_low}")
    order = np.argsort(freqs, kind="stable")
    labels = np.ones(len(freqs), dtype=np.int64)
    labels[order[:n_low]] = 0
    return labels


@dataclass
class StreamDataset:
    """Aggregated stream: one record per element type."""

    keys: list[str]
    groups: np.ndarray
    freqs: np.ndarray
    group_names: list[str]

    def __post_init__(self):
        self.groups = np.asarray(self.groups, dtype=np.int64)
        self.freqs = np.asarray(self.freqs, dtype=np.int64)

    @property
    def n(self) -> int:
        return len(self.keys)

    @property
    def num_groups(self) -> int:
        return len(self.group_names)

    def oracle(self) -> FrequencyOracle:
        return FrequencyOracle(self.keys, self.groups, self.freqs, num_groups=self.num_groups)

    def regroup(self, labels, names: Sequence[str] | None = None) -> "StreamDataset":
        labels = np.asarray(labels, dtype=np.int64)
        if names is None:
            ell = int(labels.max()) + 1 if len(labels) else 0
            names = [str(g) for g in range(ell)]
        return StreamDataset(list(self.keys), labels, self.freqs.copy(), list(names))

    def summary(self) -> dict:
        sizes = np.bincount(self.groups, minlength=self.num_groups)
        masses = [int(self.freqs[self.groups == g].sum()) for g in range(self.num_groups)]
        return {
            "n": self.n,
            "N": int(self.freqs.sum()),
            "groups": self.group_names,
            "n_g": [int(x) for x in sizes],
            "N_g": masses,
        }

    def write_csv(self, path, summary: bool = True) -> None:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["element", "group", "count"])
            for k, g, f in zip(self.keys, self.groups, self.freqs):
                writer.writerow([k, self.group_names[g], int(f)])
        if summary:
            summary_path(path).write_text(json.dumps(self.summary(), indent=2) + "\n")


def summary_path(path) -> Path:
    return Path(path).with_suffix(".json")


def make_keys(n: int, prefix: str = "e", start: int = 0) -> list[str]:
    width = max(1, len(str(start + n - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(start, start + n)]


def generate_grouped(
    dist: DistributionSpec, n: int, seed=0, grouping: str | None = None
) -> StreamDataset:
    """One distribution, grouped by frequency.

    ``grouping`` is ``threshold:tau``, ``equiwidth:ell`` or ``rank:n_low``;
    ``None`` puts everything in one group.
    """
    freqs = gen_frequencies(dist, n, seed)
    ds = StreamDataset(make_keys(n), np.zeros(n, dtype=np.int64), freqs, ["0"])
    if grouping is None:
        return ds
    return ds.regroup(apply_grouping(freqs, grouping))


def apply_grouping(freqs, grouping: str) -> np.ndarray:
    kind, _, arg = grouping.partition(":")
    kind = kind.strip().lower().replace("-", "").replace("_", "")
    try:
        if kind == "threshold":
            return group_by_threshold(freqs, float(arg))
        if kind == "equiwidth":
            return group_equi_width(freqs, int(arg))
        if kind == "rank":
            return group_by_rank(freqs, int(arg))
    except ValueError as exc:
        raise ValueError(f"bad grouping {grouping!r}: {exc}") from exc
    raise ValueError(f"unknown grouping strategy {grouping!r}")


def generate_sourced(dists: Sequence[DistributionSpec], sizes: Sequence[int], seed=0) -> StreamDataset:
    """One group per distribution: group g gets ``sizes[g]`` draws from ``dists[g]``."""
    if len(dists) != len(sizes):
        raise ValueError("need one size per distribution")
    rng = np.random.default_rng(seed)
    keys, groups, freqs = [], [], []
    start = 0
    total = sum(int(s) for s in sizes)
    width = len(str(max(total - 1, 0)))
    for g, (dist, size) in enumerate(zip(dists, sizes)):
        size = int(size)
        if size < 1:
            raise ValueError(f"group {g} must have at least one element")
        freqs.append(gen_frequencies(dist, size, rng))
        keys.extend(f"e{i:0{width}d}" for i in range(start, start + size))
        groups.append(np.full(size, g, dtype=np.int64))
        start += size
    return StreamDataset(
        keys, np.concatenate(groups), np.concatenate(freqs), [str(g) for g in range(len(sizes))]
    )


def escape_key_part(value: str, sep: str) -> str:
    return value.replace("\\", "\\\\").replace(sep, "\\" + sep)


def _group_order(values: set[str]) -> list[str]:
    try:
        return sorted(values, key=lambda v: (float(v), v))
    except ValueError:
        return sorted(values)


def ingest_csv(
    path,
    key_columns: Sequence[str],
    group_column: str,
    count_column: str | None = None,
    sep: str = "|",
) -> StreamDataset:
    """Aggregate a CSV of events (or pre-counted rows) into a dataset.

    The element key is the ``sep``-joined values of ``key_columns`` (parts
    are backslash-escaped when more than one column is joined).  Group
    values map to dense ids in sorted order (numeric when every value
    parses as a number).  Each row counts once unless ``count_column`` is
    given.
    """
    if len(sep) != 1:
        raise ValueError("separator must be a single character")
    key_columns = list(key_columns)
    if not key_columns:
        raise ValueError("need at least one key column")
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    counts: dict[str, int] = {}
    key_group: dict[str, str] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("empty file, header row required", line=1) from None
        header = [h.strip() for h in header]
        wanted = key_columns + [group_column] + ([count_column] if count_column else [])
        missing = [c for c in wanted if c not in header]
        if missing:
            raise DatasetError(f"missing column(s): {', '.join(missing)}", line=1)
        kidx = [header.index(c) for c in key_columns]
        gidx = header.index(group_column)
        cidx = header.index(count_column) if count_column else None
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DatasetError(f"expected {len(header)} fields, got {len(row)}", line=line)
            parts = [row[i] for i in kidx]
            key = sep.join(escape_key_part(p, sep) for p in parts) if len(parts) > 1 else parts[0]
            if not key:
                raise DatasetError("empty element key", line=line)
            group = row[gidx]
            if cidx is None:
                c = 1
            else:
                try:
                    c = int(row[cidx])
                except ValueError:
                    raise DatasetError(f"count {row[cidx]!r} is not an integer", line=line) from None
                if c < 1:
                    raise DatasetError(f"count must be >= 1, got {c}", line=line)
            prev = key_group.setdefault(key, group)
            if prev != group:
                raise DatasetError(
                    f"element {key!r} appears in groups {prev!r} and {group!r}", line=line
                )
            counts[key] = counts.get(key, 0) + c
    names = _group_order(set(key_group.values()))
    gid = {name: i for i, name in enumerate(names)}
    keys = list(counts)
    return StreamDataset(
        keys,
        np.array([gid[key_group[k]] for k in keys], dtype=np.int64),
        np.array([counts[k] for k in keys], dtype=np.int64),
        names,
    )


def load_dataset(path) -> StreamDataset:
    """Read a dataset CSV with header ``element,group,count``."""
    return ingest_csv(path, ["element"], "group", "count")


def parse_genspec(text: str) -> dict:
    """Parse a generator spec such as ``n=20000;dist=zipf:1.1;group=threshold:20``
    or ``n=10000;nl=9000;l=gaussian:100,50;h=gaussian:1000,500``."""
    spec = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        k, eq, v = part.partition("=")
        if not eq:
            raise ValueError(f"bad genspec field {part!r} (expected key=value)")
        spec[k.strip().lower()] = v.strip()
    if "n" not in spec:
        raise ValueError("genspec needs n=<element count>")
    spec["n"] = int(spec["n"])
    if "dist" in spec:
        spec["dist"] = DistributionSpec.parse(spec["dist"])
    elif "l" in spec and "h" in spec:
        spec["l"] = DistributionSpec.parse(spec["l"])
        spec["h"] = DistributionSpec.parse(spec["h"])
        spec["nl"] = int(spec.get("nl", spec["n"] // 2))
    else:
        raise ValueError("genspec needs dist=... or both l=... and h=...")
    return spec


def generate_from_genspec(spec: dict, seed=0, n_low: int | None = None) -> StreamDataset:
    """Build a dataset from a parsed genspec; ``n_low`` overrides the low-group size."""
    n = spec["n"]
    if "dist" in spec:
        ds = generate_grouped(spec["dist"], n, seed, spec.get("group"))
        if n_low is not None:
            ds = ds.regroup(group_by_rank(ds.freqs, n_low))
        return ds
    nl = spec["nl"] if n_low is None else n_low
    return generate_sourced([spec["l"], spec["h"]], [nl, n - nl], seed)


__all__ = [
    "DistributionSpec",
    "StreamDataset",
    "apply_grouping",
    "gen_frequencies",
    "generate_from_genspec",
    "generate_grouped",
    "generate_sourced",
    "group_by_rank",
    "group_by_threshold",
    "group_equi_width",
    "ingest_csv",
    "load_dataset",
    "parse_genspec",
]
