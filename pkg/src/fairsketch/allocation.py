"""Per-group column (and row) allocation.

The central quantity is the expected minimum occupancy

    E(n, d, w) = sum_{x=1..n} Pr(X >= x) ** d,   X ~ Bin(n, 1/w),

i.e. the expected size of the smallest of the ``d`` buckets an element of an
``n``-element group lands in when the group has ``w`` columns.  Fair widths
equalise E across groups.  For ``d == 1`` this reduces to allocating columns
in proportion to group sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .errors import InfeasibleAllocationError

Precision = Literal["exact", "stirling"]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_EXACT_LOGFACT_CUTOFF = 32

# log(k!) for k < cutoff, by direct summation
_SMALL_LOGFACT = [0.0]
for _k in range(1, _EXACT_LOGFACT_CUTOFF):
    _SMALL_LOGFACT.append(math.fsum(math.log(i) for i in range(2, _k + 1)))


def _stirling_lgamma(z: float) -> float:
    """log Gamma(z) by Stirling's series truncated after the 1/(12 z) term."""
    return (z - 0.5) * math.log(z) - z + _HALF_LOG_2PI + 1.0 / (12.0 * z)


def log_factorial(k: int) -> float:
    if k < 0:
        raise ValueError(f"factorial of negative number {k}")
    if k < _EXACT_LOGFACT_CUTOFF:
        return _SMALL_LOGFACT[k]
    return _stirling_lgamma(k + 1.0)


def log_binomial(n: int, k: int) -> float:
    """Natural log of C(n, k) via log-factorials (Stirling above a cutoff)."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range [0, {n}]")
    if k == 0 or k == n:
        return 0.0
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def _check_args(n: int, d: int, w: int) -> None:
    if n < 1 or d < 1 or w < 1:
        raise ValueError(f"n, d, w must all be >= 1 (got n={n}, d={d}, w={w})")


def _pmf_exact(n: int, w: int) -> np.ndarray:
    """Binomial pmf values alpha_i = C(n,i) (1/w)^i ((w-1)/w)^(n-i), i = 1..n.

    Uses the multiplicative recurrence alpha_i = alpha_{i-1} (n+1-i) / (i (w-1)),
    started at the mode with an unnormalised value of one and walked in both
    directions, then divided by the total mass.  Terms far from the mode
    underflow to zero harmlessly, and rounding only grows with the distance
    from the mode rather than with ``n``.
    """
    i = np.arange(1, n + 1, dtype=np.float64)
    ratio = (n + 1 - i) / (i * (w - 1))  # alpha_i / alpha_{i-1}
    mode = (n + 1) // w
    u = np.empty(n + 1, dtype=np.float64)
    u[mode] = 1.0
    if mode < n:
        u[mode + 1 :] = np.cumprod(ratio[mode:])
    if mode > 0:
        u[:mode] = np.cumprod(1.0 / ratio[mode - 1 :: -1])[::-1]
    return u[1:] / math.fsum(u)


def _pmf_stirling(n: int, w: int) -> np.ndarray:
    lp = -math.log(w)
    lq = math.log(w - 1) - math.log(w)
    logs = np.array(
        [log_binomial(n, i) + i * lp + (n - i) * lq for i in range(1, n + 1)], dtype=np.float64
    )
    return np.exp(logs)


def expected_min_occupancy(n: int, d: int, w: int, precision: Precision = "exact") -> float:
    """Expected size of the smallest of ``d`` buckets holding an element.

    ``n`` elements are hashed into ``w`` buckets; each of ``d`` rows hashes
    independently.  Runs in O(n log d).
    """
    _check_args(n, d, w)
    if w == 1:
        return float(n)
    if precision == "exact":
        alpha = _pmf_exact(n, w)
    elif precision == "stirling":
        alpha = _pmf_stirling(n, w)
    else:
        raise ValueError(f"unknown precision {precision!r}")
    # beta_x = Pr(X >= x), suffix sums of the pmf
    beta = np.cumsum(alpha[::-1])[::-1]
    np.minimum(beta, 1.0, out=beta)
    return float(np.sum(beta**d))


def expected_min_occupancy_naive(n: int, d: int, w: int) -> float:
    """The same expectation by direct O(n^2) evaluation of the double sum.

    Each pmf term is formed from exact integers and rounded once, so there
    is no overflow in the binomial coefficient.
    """
    _check_args(n, d, w)
    denom = w**n
    pmf = [math.comb(n, i) * (w - 1) ** (n - i) / denom for i in range(n + 1)]
    return math.fsum(math.fsum(pmf[x:]) ** d for x in range(1, n + 1))


def widths_d1(sizes: Sequence[int], w: int) -> list[int]:
    """Columns proportional to group sizes, rounded by largest remainder.

    Every group gets at least one column; when rounding would leave a group
    empty, a column is taken from the group that was rounded up the most
    (or otherwise has the largest surplus over its quota).
    """
    sizes = _check_sizes(sizes)
    if w < len(sizes):
        raise InfeasibleAllocationError(f"w={w} is smaller than the number of groups {len(sizes)}")
    n = sum(sizes)
    quotas = [Fraction(s * w, n) for s in sizes]
    widths = [math.floor(q) for q in quotas]
    leftover = w - sum(widths)
    order = sorted(range(len(sizes)), key=lambda g: (-(quotas[g] - widths[g]), g))
    for g in order[:leftover]:
        widths[g] += 1
    for g in range(len(widths)):
        if widths[g] == 0:
            donor = max(
                (j for j in range(len(widths)) if widths[j] > 1),
                key=lambda j: (widths[j] - quotas[j], widths[j], -j),
            )
            widths[donor] -= 1
            widths[g] = 1
    return widths


def _check_sizes(sizes: Sequence[int]) -> list[int]:
    sizes = [int(s) for s in sizes]
    if len(sizes) < 1:
        raise ValueError("need at least one group")
    if any(s < 1 for s in sizes):
        raise ValueError(f"group sizes must be >= 1, got {sizes}")
    return sizes


def _split_residual(n_l, n_h, d, w, w_l, precision) -> float:
    return expected_min_occupancy(n_l, d, w_l, precision) - expected_min_occupancy(
        n_h, d, w - w_l, precision
    )


def solve_two_group(
    n_l: int, n_h: int, w: int, d: int, precision: Precision = "exact"
) -> tuple[int, float]:
    """Integer ``w_l`` in ``[1, w-1]`` best equalising E across two groups.

    E(n_l, d, w_l) is non-increasing in w_l while E(n_h, d, w - w_l) is
    non-decreasing, so their difference changes sign once.  Binary search
    finds the first w_l where the difference is <= 0 and the better of that
    point and its predecessor is returned (ties go to the smaller w_l).

    Returns:
        ``(w_l, residual)`` where residual is ``|E_l - E_h|`` at ``w_l``.
    """
    if n_l < 1 or n_h < 1:
        raise ValueError(f"group sizes must be >= 1, got ({n_l}, {n_h})")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if w < 2:
        raise InfeasibleAllocationError(f"two groups need w >= 2, got w={w}")

    cache: dict[int, float] = {}

    def diff(w_l: int) -> float:
        if w_l not in cache:
            cache[w_l] = _split_residual(n_l, n_h, d, w, w_l, precision)
        return cache[w_l]

    lo, hi = 1, w - 1
    # smallest w_l with diff(w_l) <= 0, or w - 1 if none
    while lo < hi:
        mid = (lo + hi) // 2
        if diff(mid) <= 0:
            hi = mid
        else:
            lo = mid + 1
    best = lo
    if lo > 1 and abs(diff(lo - 1)) <= abs(diff(lo)):
        best = lo - 1
    return best, abs(diff(best))


@dataclass(frozen=True)
class AllocationResult:
    widths: list[int]
    residuals: list[float]

    def to_dict(self) -> dict:
        return {"widths": list(self.widths), "residuals": list(self.residuals)}


def solve_multi(
    sizes: Sequence[int], w: int, d: int, precision: Precision = "exact"
) -> AllocationResult:
    """Widths for any number of groups by peeling one group at a time.

    Step j splits the remaining budget between group j and the union of the
    groups after it, then recurses on the remainder.
    """
    sizes = _check_sizes(sizes)
    ell = len(sizes)
    if w < ell:
        raise InfeasibleAllocationError(
            f"w={w} is smaller than the number of groups {ell}", step=0
        )
    if ell == 1:
        return AllocationResult([w], [])
    widths: list[int] = []
    residuals: list[float] = []
    budget = w
    for j in range(ell - 1):
        rest = sum(sizes[j + 1 :])
        w_j, res = solve_two_group(sizes[j], rest, budget, d, precision)
        remaining_groups = ell - j - 1
        if budget - w_j < remaining_groups:
            raise InfeasibleAllocationError(
                f"step {j}: group {j} takes {w_j} of {budget} columns, leaving "
                f"{budget - w_j} for {remaining_groups} remaining groups",
                step=j,
            )
        widths.append(w_j)
        residuals.append(res)
        budget -= w_j
    widths.append(budget)
    return AllocationResult(widths, residuals)


def solve_row_partition(n_l: int, n_h: int, w: int, d: int) -> tuple[int, int, float]:
    """Split ``d`` rows between two groups to best equalise E at full width.

    ``d`` is small, so every split is tried; ties go to the smaller ``d_l``.

    Returns:
        ``(d_l, d_h, residual)``.
    """
    if d < 2:
        raise InfeasibleAllocationError(f"row partitioning needs d >= 2, got d={d}")
    if n_l < 1 or n_h < 1 or w < 1:
        raise ValueError("n_l, n_h and w must be >= 1")
    best = None
    for d_l in range(1, d):
        res = abs(expected_min_occupancy(n_l, d_l, w) - expected_min_occupancy(n_h, d - d_l, w))
        if best is None or res < best[2]:
            best = (d_l, d - d_l, res)
    return best


def fair_widths(sizes: Sequence[int], w: int, d: int, precision: Precision = "exact") -> list[int]:
    """Column widths for a fair sketch: the proportional closed form when
    ``d == 1``, the occupancy solver otherwise."""
    if d == 1:
        return widths_d1(sizes, w)
    return solve_multi(sizes, w, d, precision).widths
