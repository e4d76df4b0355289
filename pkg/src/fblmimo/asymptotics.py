"""Infinite-blocklength baselines: outage capacity, an ergodic-capacity lower
bound, and the high-SNR scaling constants.

These are the horizontal asymptotes the finite-blocklength bounds are judged
against: the outage capacity is the large-coherence-interval limit at fixed
error probability, and the unitary-input mutual information lower-bounds the
ergodic (no-CSI) capacity.
"""

from __future__ import annotations

import math

import numpy as np

from .converse import EXHAUSTIVE_MAX_BLOCKS, PowerAllocation
from .dt import BoundPoint, CHUNK, default_samples, sum_over_blocks
from .randmat import RngStream, sample_complex_gaussian
from .ustm import ChannelConfig, UstmParams

__all__ = [
    "m_star",
    "high_snr_prelog",
    "outage_prob",
    "outage_capacity",
    "ergodic_capacity_lb",
]


def m_star(m_t: int, m_r: int, n_c: int) -> int:
    """Number of transmit antennas that maximizes the high-SNR rate."""
    if m_t < 1 or m_r < 1 or n_c < 1:
        raise ValueError("all arguments must be positive")
    return min(m_t, m_r, n_c // 2)


def high_snr_prelog(m_t: int, m_r: int, n_c: int) -> float:
    """Leading ln(rho) coefficient of capacity without CSI: m*(1 - m*/n_c)."""
    if n_c <= 1:
        raise ValueError("need n_c > 1")
    ms = m_star(m_t, m_r, n_c)
    return ms * (1.0 - ms / n_c)


def _logdet_block(m: int, cfg: ChannelConfig, rng, size: int) -> np.ndarray:
    """ln det(I + (rho/m) H_m^H H_m) draws, H_m the first m rows of H."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    h = sample_complex_gaussian(m, cfg.m_r, gen, size=size)
    g = np.eye(cfg.m_r) + (cfg.rho / m) * (np.swapaxes(h, -1, -2).conj() @ h)
    _, logdet = np.linalg.slogdet(g)
    return logdet


def outage_prob(rate: float, per_block_active, cfg: ChannelConfig, n_samples: int, seed=0):
    """Monte Carlo outage probability at a target rate (nats/cu).

    Estimates Pr{(1/l) sum_k ln det(I + H_k^H Q_k H_k) <= rate} where Q_k is
    diagonal with rho/m_k on the first m_k antennas (trace rho per block).
    Returns (probability, standard_error).
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    mi = _mutual_info_sums(PowerAllocation(tuple(per_block_active)), cfg, n_samples, seed)
    p = float(np.mean(mi <= rate))
    return p, math.sqrt(p * (1.0 - p) / n_samples)


def _mutual_info_sums(alloc: PowerAllocation, cfg: ChannelConfig, n_samples: int, seed):
    base = seed if isinstance(seed, RngStream) else RngStream(int(seed))
    total = np.zeros(n_samples)
    for k, m in enumerate(alloc.per_block_active):
        for lo in range(0, n_samples, CHUNK):
            hi = min(lo + CHUNK, n_samples)
            rng = base.child("outage", m, k, lo // CHUNK)
            total[lo:hi] += _logdet_block(m, cfg, rng, hi - lo)
    return total / cfg.l


def _outage_candidates(cfg: ChannelConfig, mode: str):
    if mode == "shared":
        return [PowerAllocation((m,) * cfg.l) for m in range(1, cfg.m_t + 1)]
    if mode == "exhaustive":
        if cfg.l > EXHAUSTIVE_MAX_BLOCKS:
            raise ValueError(
                f"exhaustive outage search is limited to l <= {EXHAUSTIVE_MAX_BLOCKS}"
            )
        import itertools

        return [
            PowerAllocation(t)
            for t in itertools.product(range(1, cfg.m_t + 1), repeat=cfg.l)
        ]
    raise ValueError(f"unknown allocation mode {mode!r}")


def outage_capacity(
    cfg: ChannelConfig,
    n_samples: int | None = None,
    seed=0,
    allocation_mode: str = "shared",
) -> BoundPoint:
    """Largest rate whose best-allocation outage probability is <= epsilon.

    The inner minimization runs over uniform-subset power profiles with a
    shared antenna count per codeword (per-block exhaustive for small l);
    the outer search bisects the rate against each fixed sample batch.
    """
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    best = None
    for alloc in _outage_candidates(cfg, allocation_mode):
        mi = np.sort(_mutual_info_sums(alloc, cfg, n_samples, seed))
        lo, hi = 0.0, float(mi[-1]) + 1.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if np.searchsorted(mi, mid, side="right") / n_samples <= cfg.epsilon:
                lo = mid
            else:
                hi = mid
        if best is None or lo > best[0]:
            best = (lo, alloc, mi)
    rate, alloc, mi = best
    # 1-sigma quantile spread via the binomial error of the empirical CDF
    d = math.sqrt(cfg.epsilon * (1.0 - cfg.epsilon) / n_samples)
    q_lo = float(np.quantile(mi, max(cfg.epsilon - d, 0.0)))
    q_hi = float(np.quantile(mi, min(cfg.epsilon + d, 1.0)))
    from collections import Counter

    return BoundPoint(
        kind="outage",
        rate_npcu=rate,
        m_active_opt=Counter(alloc.per_block_active).most_common(1)[0][0],
        mc_std_err=(q_hi - q_lo) / 2.0,
        cfg=cfg,
        samples=n_samples,
    )


def ergodic_capacity_lb(cfg: ChannelConfig, n_samples: int | None = None, seed=0) -> BoundPoint:
    """Unitary-input mutual information per channel use, best antenna count.

    Returns max over the number of active antennas of mean(S)/n_c, with the
    maximizing count reported.
    """
    from .dt import sample_S_block

    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    best = None
    for m_active in range(1, cfg.m_t + 1):
        params = UstmParams.for_config(cfg, m_active)
        s = sum_over_blocks(
            lambda rng, size: sample_S_block(params, cfg, rng, size),
            1,
            n_samples,
            seed,
            ("ergodic", m_active),
        )
        rate = float(np.mean(s)) / cfg.n_c
        se = float(np.std(s)) / math.sqrt(n_samples) / cfg.n_c
        if best is None or rate > best[0]:
            best = (rate, m_active, se)
    rate, m_opt, se = best
    return BoundPoint(
        kind="ergodic",
        rate_npcu=rate,
        m_active_opt=m_opt,
        mc_std_err=se,
        cfg=cfg,
        samples=n_samples,
    )
