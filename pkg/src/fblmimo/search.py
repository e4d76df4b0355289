"""Shared rate-search machinery for the Monte Carlo bounds.

Both the achievability and converse bounds reduce to scans over a single
batch of per-codeword information-density sums; reusing one batch across all
candidate rates removes Monte Carlo noise from the monotone searches.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "InsufficientSamples",
    "EmptyFeasible",
    "TailUnderflow",
    "eps_ub",
    "dt_threshold",
    "relaxed_converse_value",
]


class InsufficientSamples(RuntimeError):
    """Too few tail samples to resolve the target error probability."""


class EmptyFeasible(RuntimeError):
    """No candidate threshold satisfies the feasibility constraint."""


class TailUnderflow(RuntimeError):
    """No Monte Carlo sample landed in the tail being estimated."""


def _suffix_logsumexp(neg_sorted: np.ndarray) -> np.ndarray:
    """lse[k] = ln sum_{i >= k} exp(neg_sorted_rev...) for suffixes of -s."""
    # accumulate from the end; logaddexp.accumulate on the reversed array
    rev = np.logaddexp.accumulate(neg_sorted[::-1])
    return rev[::-1]


class SortedSums:
    """Sorted information-density sums with precomputed tail sums."""

    def __init__(self, sums: np.ndarray):
        sums = np.asarray(sums, dtype=float)
        if sums.size == 0:
            raise ValueError("empty sample batch")
        if not np.all(np.isfinite(sums)):
            raise ValueError("non-finite information-density sums")
        self.sorted = np.sort(sums)
        self.n = sums.size
        self._suffix_lse = _suffix_logsumexp(-self.sorted)

    def eps_ub(self, a: float) -> float:
        """(1/N) sum_i min(1, exp(a - s_i)); nondecreasing in a."""
        k = int(np.searchsorted(self.sorted, a, side="right"))
        tail = 0.0 if k >= self.n else np.exp(a + self._suffix_lse[k])
        return (k + tail) / self.n

    def eps_ub_std_err(self, a: float) -> float:
        t = np.minimum(1.0, np.exp(np.minimum(a - self.sorted, 0.0)))
        return float(np.std(t) / np.sqrt(self.n))

    def count_below(self, a: float) -> int:
        return int(np.searchsorted(self.sorted, a, side="right"))


def eps_ub(log_M_minus_1: float, sums: np.ndarray) -> float:
    """Random-coding error upper bound at message-count parameter ln(M-1)."""
    if log_M_minus_1 == float("-inf"):
        return 0.0
    return SortedSums(sums).eps_ub(log_M_minus_1)


def dt_threshold(batch: SortedSums, epsilon: float, tol: float = 1e-12) -> float:
    """Largest a = ln(M-1) with eps_ub(a) <= epsilon, by bisection."""
    lo = float(batch.sorted[0]) - 60.0
    while batch.eps_ub(lo) > epsilon:
        lo -= 60.0
    hi = float(batch.sorted[-1]) + 1.0
    if batch.eps_ub(hi) <= epsilon:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if batch.eps_ub(mid) <= epsilon:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(lo)):
            break
    return lo


def relaxed_converse_value(batch: SortedSums, epsilon: float) -> tuple[float, float]:
    """inf over lambda of [lambda - ln(F_hat(lambda) - epsilon)] on the batch.

    The objective is increasing between order statistics, so the scan over
    the (positive) order statistics is exact.  Returns (value, F_hat at the
    minimizer) for standard-error reporting.
    """
    s = batch.sorted
    n = batch.n
    k = np.arange(1, n + 1)
    frac = k / n
    ok = (frac > epsilon) & (s > 0)
    if not np.any(ok):
        raise EmptyFeasible("empirical CDF never exceeds epsilon at a positive threshold")
    vals = s[ok] - np.log(frac[ok] - epsilon)
    i = int(np.argmin(vals))
    return float(vals[i]), float(frac[ok][i])
