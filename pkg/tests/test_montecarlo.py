import numpy as np
import pytest

from fairsketch.allocation import solve_two_group
from fairsketch.datagen import DistributionSpec
from fairsketch.montecarlo import McConfig, alpha_gap, mc_estimate_wl, search_wl

Z = DistributionSpec.parse("zipf:1.0")
G = DistributionSpec.parse("gaussian:100,50")


def test_symmetric_is_half():
    res = mc_estimate_wl(McConfig(200, 200, 40, 2, Z, Z, trials=20, seed=1))
    assert abs(res.avg_wl - 20) <= 1
    assert len(res.per_trial) == 20 and all(len(r) == 2 for r in res.per_repetition)


def test_matches_solver():
    solver, _ = solve_two_group(300, 700, 64, 3)
    res = mc_estimate_wl(McConfig(300, 700, 64, 3, Z, Z, trials=20, seed=0))
    assert abs(res.avg_wl - solver) <= 0.05 * 64


def test_distribution_pairs_agree():
    a = mc_estimate_wl(McConfig(300, 700, 64, 3, Z, G, trials=20, seed=2)).avg_wl
    b = mc_estimate_wl(McConfig(300, 700, 64, 3, G, G, trials=20, seed=2)).avg_wl
    assert abs(a - b) <= 0.05 * 64


def test_output_range_and_determinism():
    cfg = McConfig(5, 500, 16, 2, Z, G, trials=5, seed=3)
    a, b = mc_estimate_wl(cfg), mc_estimate_wl(cfg)
    assert a == b
    assert all(1 <= v <= 15 for reps in a.per_repetition for v in reps)


def test_search_picks_best_endpoint():
    rng = np.random.default_rng(0)
    fl, fh = rng.integers(1, 50, 100).astype(float), rng.integers(1, 50, 300).astype(float)
    hl = rng.integers(0, 2**63, 100, dtype=np.uint64)
    hh = rng.integers(0, 2**63, 300, dtype=np.uint64)
    w = 32
    got = search_wl(fl, hl, fh, hh, w)
    gaps = {x: abs(alpha_gap(fl, hl, fh, hh, w, x)) for x in range(1, w)}
    best = min(gaps.values())
    assert gaps[got] <= best + 0.02


def test_invalid_config():
    with pytest.raises(ValueError):
        McConfig(0, 5, 8, 1, Z, Z)
    with pytest.raises(ValueError):
        McConfig(5, 5, 1, 1, Z, Z)
    with pytest.raises(ValueError):
        McConfig(5, 5, 8, 1, Z, Z, trials=0)
