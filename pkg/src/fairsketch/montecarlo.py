"""Sampling-based estimate of the low-group width ``w_l``.

Independent of the occupancy formula: frequencies are drawn for each group,
inserted into one-row fair sketches, and ``w_l`` is binary-searched to
equalise the measured mean approximation factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import DistributionSpec, gen_frequencies, make_keys
from .hashing import RowHasher, derive_seeds, fingerprint


@dataclass(frozen=True)
class McConfig:
    n_l: int
    n_h: int
    w: int
    d: int
    dist_l: DistributionSpec
    dist_h: DistributionSpec
    trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_l < 1 or self.n_h < 1:
            raise ValueError("group sizes must be >= 1")
        if self.w < 2:
            raise ValueError("w must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class McResult:
    avg_wl: float
    per_trial: list[float]
    per_repetition: list[list[int]]


def _mean_alpha(freqs: np.ndarray, hashes: np.ndarray, width: int) -> float:
    cols = (hashes % np.uint64(width)).astype(np.int64)
    load = np.bincount(cols, weights=freqs, minlength=width)
    return float(np.mean(freqs / load[cols]))


def alpha_gap(freqs_l, hashes_l, freqs_h, hashes_h, w: int, w_l: int) -> float:
    """``mean alpha_l - mean alpha_h`` on a one-row fair sketch split at ``w_l``."""
    return _mean_alpha(freqs_l, hashes_l, w_l) - _mean_alpha(freqs_h, hashes_h, w - w_l)


def search_wl(freqs_l, hashes_l, freqs_h, hashes_h, w: int) -> int:
    """Binary search for the integer ``w_l`` minimising ``|alpha gap|``.

    The gap is treated as non-decreasing in ``w_l``.  The bracket shrinks
    to width one and the better endpoint wins (ties to the smaller).
    """
    cache: dict[int, float] = {}

    def gap(w_l):
        if w_l not in cache:
            cache[w_l] = alpha_gap(freqs_l, hashes_l, freqs_h, hashes_h, w, w_l)
        return cache[w_l]

    lo, hi = 1, w - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if gap(mid) >= 0:
            hi = mid
        else:
            lo = mid + 1
    if lo > 1 and abs(gap(lo - 1)) <= abs(gap(lo)):
        return lo - 1
    return lo


def mc_estimate_wl(cfg: McConfig) -> McResult:
    fps_l = [fingerprint(k) for k in make_keys(cfg.n_l, prefix="l")]
    fps_h = [fingerprint(k) for k in make_keys(cfg.n_h, prefix="h")]
    per_trial, per_rep = [], []
    for t in range(cfg.trials):
        rng = np.random.default_rng(derive_seeds(cfg.seed, 1, t)[0])
        f_l = gen_frequencies(cfg.dist_l, cfg.n_l, rng).astype(np.float64)
        f_h = gen_frequencies(cfg.dist_h, cfg.n_h, rng).astype(np.float64)
        reps = []
        for r, row_seed in enumerate(derive_seeds(cfg.seed, cfg.d, t, 1)):
            h = RowHasher(row_seed)
            reps.append(search_wl(f_l, h.hash_many(fps_l), f_h, h.hash_many(fps_h), cfg.w))
        per_rep.append(reps)
        per_trial.append(float(np.mean(reps)))
    return McResult(float(np.mean(per_trial)), per_trial, per_rep)
