"""Exact-count oracle, approximation factors, fairness and price of fairness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hashing import RowHasher, derive_seeds, fingerprint


@dataclass
class FrequencyOracle:
    """Ground-truth counts and group labels for a set of element types.

    ``keys``, ``groups`` and ``freqs`` are aligned; estimates passed to the
    functions below must use the same order.
    """

    keys: list[bytes]
    groups: np.ndarray
    freqs: np.ndarray
    num_groups: int = field(default=0)
    _fps: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.keys = [k.encode("utf-8") if isinstance(k, str) else bytes(k) for k in self.keys]
        self.groups = np.asarray(self.groups, dtype=np.int64)
        self.freqs = np.asarray(self.freqs, dtype=np.int64)
        if not (len(self.keys) == len(self.groups) == len(self.freqs)):
            raise ValueError("keys, groups and freqs must have equal length")
        if len(self.freqs) and self.freqs.min() < 1:
            raise ValueError("frequencies must be >= 1")
        if len(self.groups) and self.groups.min() < 0:
            raise ValueError("group ids must be >= 0")
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("element keys must be distinct")
        if not self.num_groups:
            self.num_groups = int(self.groups.max()) + 1 if len(self.groups) else 0

    @property
    def n(self) -> int:
        return len(self.keys)

    @property
    def N(self) -> int:
        return int(self.freqs.sum())

    def group_sizes(self) -> list[int]:
        return np.bincount(self.groups, minlength=self.num_groups).tolist()

    def group_masses(self) -> list[int]:
        return [int(self.freqs[self.groups == g].sum()) for g in range(self.num_groups)]

    def members(self, g: int) -> np.ndarray:
        return np.flatnonzero(self.groups == g)

    def fingerprints(self) -> np.ndarray:
        if self._fps is None:
            self._fps = np.array([fingerprint(k) for k in self.keys], dtype=np.uint64)
        return self._fps


@dataclass
class GroupStats:
    group: int
    n: int
    mass: int
    mean_alpha: float
    mean_additive_error: float
    total_additive_error: int
    width: int | None = None


@dataclass
class GroupReport:
    groups: list[GroupStats]

    @property
    def mean_alphas(self) -> list[float]:
        return [g.mean_alpha for g in self.groups]

    @property
    def total_additive_error(self) -> int:
        return sum(g.total_additive_error for g in self.groups)

    @property
    def unfairness(self) -> float:
        return unfairness(self)


def alpha(f: int, fhat: int) -> float:
    """Approximation factor f / fhat of one estimate, in (0, 1]."""
    if f < 1:
        raise ValueError(f"true frequency must be >= 1, got {f}")
    if fhat < f:
        raise ValueError(f"estimate {fhat} below true frequency {f}: sketch underestimated")
    return f / fhat


def _alphas(oracle: FrequencyOracle, estimates) -> np.ndarray:
    est = np.asarray(estimates, dtype=np.int64)
    if est.shape != oracle.freqs.shape:
        raise ValueError("one estimate per element type is required")
    if np.any(est < oracle.freqs):
        raise ValueError("an estimate is below its true frequency: sketch underestimated")
    return oracle.freqs / est


def group_mean_alpha(oracle: FrequencyOracle, estimates, g: int) -> float:
    """Unweighted mean approximation factor over the element types of ``g``."""
    idx = oracle.members(g)
    if len(idx) == 0:
        raise ValueError(f"group {g} is empty")
    return float(np.mean(_alphas(oracle, estimates)[idx]))


def unfairness(report_or_means) -> float:
    """Spread ``max - min`` of the per-group mean approximation factors."""
    means = report_or_means.mean_alphas if isinstance(report_or_means, GroupReport) else report_or_means
    means = list(means)
    if len(means) < 2:
        return 0.0
    return float(max(means) - min(means))


def additive_error(f: int, fhat: int) -> int:
    if fhat < f:
        raise ValueError(f"negative additive error: estimate {fhat} < true {f}")
    return int(fhat) - int(f)


def total_additive_error(oracle: FrequencyOracle, estimates) -> int:
    est = np.asarray(estimates, dtype=np.int64)
    err = est - oracle.freqs
    if np.any(err < 0):
        raise ValueError("negative additive error: sketch underestimated")
    return int(err.sum())


def group_report(oracle: FrequencyOracle, estimates, widths: Sequence[int] | None = None) -> GroupReport:
    alphas = _alphas(oracle, estimates)
    errors = np.asarray(estimates, dtype=np.int64) - oracle.freqs
    stats = []
    for g in range(oracle.num_groups):
        idx = oracle.members(g)
        if len(idx) == 0:
            raise ValueError(f"group {g} is empty")
        stats.append(
            GroupStats(
                group=g,
                n=len(idx),
                mass=int(oracle.freqs[idx].sum()),
                mean_alpha=float(alphas[idx].mean()),
                mean_additive_error=float(errors[idx].mean()),
                total_additive_error=int(errors[idx].sum()),
                width=None if widths is None else int(widths[g]),
            )
        )
    return GroupReport(stats)


def pof(L_fcm: int, L_cm: int) -> int:
    """Price of fairness: increase in total additive error of the fair sketch."""
    return L_fcm - L_cm


def theoretical_Lcm_d1(n: int, N: float, w: float) -> float:
    """Expected total additive error of a one-row CM with random hashing."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n - 1) * N / w


def theoretical_Lfcm_d1(sizes: Sequence[int], masses: Sequence[float], w: float) -> float:
    """Expected total additive error of a one-row FCM with proportional
    (fractional) widths ``w_g = n_g / n * w``."""
    n = sum(sizes)
    N = sum(masses)
    return n * N / w - sum((n / ng) * (Ng / w) for ng, Ng in zip(sizes, masses))


def theoretical_pof_d1(sizes: Sequence[int], masses: Sequence[float], w: float) -> float:
    n = sum(sizes)
    N = sum(masses)
    return N / w - sum((n / ng) * (Ng / w) for ng, Ng in zip(sizes, masses))


def theoretical_uniform_L_d1(n: int, N: float, w: int) -> float:
    """Total additive error when every bucket holds exactly n / w types."""
    return N * (n / w - 1)


def round_robin_columns(oracle: FrequencyOracle, widths: Sequence[int]) -> np.ndarray:
    """Perfectly uniform one-row assignment of element types to columns.

    ``widths=[w]`` deals every type round-robin over ``w`` columns (a CM with
    uniform hashing); a per-group list deals each group over its own range.
    """
    if not widths:
        raise ValueError("widths are required")
    cols = np.empty(oracle.n, dtype=np.int64)
    if len(widths) == 1:
        cols[:] = np.arange(oracle.n) % widths[0]
        return cols
    offset = 0
    for g, wg in enumerate(widths):
        idx = oracle.members(g)
        cols[idx] = offset + np.arange(len(idx)) % wg
        offset += wg
    return cols


def additive_errors_for_columns(freqs: np.ndarray, columns: np.ndarray) -> np.ndarray:
    """Per-element collision mass for one row with a fixed column assignment.

    ``columns`` may be 2-D (rows x elements); the minimum over rows is taken.
    """
    freqs = np.asarray(freqs, dtype=np.int64)
    columns = np.atleast_2d(columns)
    size = int(columns.max()) + 1 if columns.size else 0
    per_row = [np.bincount(c, weights=freqs, minlength=size)[c] - freqs for c in columns]
    return np.min(np.array(per_row), axis=0)


def sketch_columns(
    oracle: FrequencyOracle, hashers: Sequence[RowHasher], width: int, widths: Sequence[int] | None = None
) -> np.ndarray:
    """Columns of every element in every row, as a ``(rows, n)`` array."""
    fps = oracle.fingerprints()
    if widths is None:
        return np.array([h.hash_many(fps) % np.uint64(width) for h in hashers], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(widths)[:-1]]).astype(np.uint64)
    wg = np.asarray(widths, dtype=np.uint64)[oracle.groups]
    off = offsets[oracle.groups]
    return np.array([off + h.hash_many(fps) % wg for h in hashers], dtype=np.int64)


def expected_additive_errors(
    oracle: FrequencyOracle,
    width: int,
    depth: int,
    trials: int,
    seed: int = 0,
    widths: Sequence[int] | None = None,
) -> np.ndarray:
    """Monte Carlo mean of each element's min-over-rows collision mass.

    Each trial draws ``depth`` fresh hashers.  With ``widths`` the columns are
    partitioned per group as in the fair sketch.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    acc = np.zeros(oracle.n, dtype=np.float64)
    for t in range(trials):
        hashers = [RowHasher(s) for s in derive_seeds(seed, depth, t)]
        cols = sketch_columns(oracle, hashers, width, widths)
        acc += additive_errors_for_columns(oracle.freqs, cols)
    return acc / trials


def expected_additive_error_dgt1(
    oracle: FrequencyOracle,
    width: int,
    depth: int,
    trials: int,
    seed: int = 0,
    widths: Sequence[int] | None = None,
) -> float:
    """Monte Carlo estimate of the expected total additive error."""
    return float(expected_additive_errors(oracle, width, depth, trials, seed, widths).sum())
