"""Dependence-testing achievability bound.

Per-coherence-block information densities are sampled in closed form (the
conditional Gaussian density against the unitary-input output density,
reduced to eigenvalues of Z^H D Z), summed over diversity branches, and the
largest message count with random-coding error below the target is found by
bisection on one shared sample batch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import search
from .randmat import RngStream, sample_scaled_gram
from .search import InsufficientSamples, SortedSums
from .ustm import ChannelConfig, UstmParams, _gamma_sums, log_psi_batch

__all__ = [
    "SampleBatch",
    "BoundPoint",
    "sample_S_block",
    "dt_error_prob",
    "dt_rate",
    "sum_over_blocks",
]

# draws generated per RNG substream; fixed so results do not depend on how
# chunks are distributed over workers
CHUNK = 1 << 15

# resample-rate invariant for degenerate spectra (per accepted draw)
MAX_DEGENERATE_RATE = 1e-6


@dataclass
class SampleBatch:
    """Per-codeword information-density sums plus their provenance."""

    sums: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sums = np.asarray(self.sums, dtype=float)
        if not np.all(np.isfinite(self.sums)):
            raise ValueError("sample sums must be finite")


@dataclass(frozen=True)
class BoundPoint:
    """One evaluated bound at one channel configuration."""

    kind: str
    rate_npcu: float
    m_active_opt: int
    mc_std_err: float
    cfg: ChannelConfig
    samples: int = 0

    def __post_init__(self):
        if self.rate_npcu < 0:
            raise ValueError("rate must be nonnegative")
        if not 1 <= self.m_active_opt <= self.cfg.m_t:
            raise ValueError("m_active_opt out of range")


def _s_constant(params: UstmParams, cfg: ChannelConfig) -> float:
    top, bot = _gamma_sums(cfg.n_c, params.m_active, cfg.m_r)
    m = params.m_active
    return m * (cfg.n_c - m) * np.log(params.c) - top + bot


def sample_S_block(params: UstmParams, cfg: ChannelConfig, rng, size=None):
    """Information-density draws S for one coherence block.

    ``S = m(n_c-m) ln(mu/(1+mu)) - sum ln Gamma(top) + sum ln Gamma(1..m)
    - tr(Z^H Z) - ln psi_m(eigs(Z^H D Z))`` with Z i.i.d. CN(0,1) and
    D = diag(1+mu on the first m rows, 1 elsewhere).  Only the scaled rows of
    Z are sampled explicitly; the rest enter through their Wishart Gram.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else size
    extra = np.full(params.m_active, params.mu)
    lam, tr = sample_scaled_gram(extra, cfg.n_c, cfg.m_r, gen, size=n)
    _, logpsi = log_psi_batch(lam, params, cfg.n_c)
    s = _s_constant(params, cfg) - tr - logpsi
    return float(s[0]) if size is None else s


def sum_over_blocks(block_sampler, l: int, n_samples: int, seed, label) -> np.ndarray:
    """Sum of ``l`` independent block draws per sample, deterministically chunked.

    ``block_sampler(rng, size)`` must return a 1-D array.  Each (block, chunk)
    pair owns its own Philox substream derived from ``(seed, label)``, so the
    result is bit-identical however the chunks are scheduled.
    """
    base = seed if isinstance(seed, RngStream) else RngStream(int(seed))
    sums = np.zeros(n_samples)
    for lo in range(0, n_samples, CHUNK):
        hi = min(lo + CHUNK, n_samples)
        chunk_idx = lo // CHUNK
        for k in range(l):
            rng = base.child(label, k, chunk_idx)
            sums[lo:hi] += block_sampler(rng, hi - lo)
    return sums


def dt_error_prob(log_M_minus_1: float, batch: SampleBatch) -> float:
    """epsilon_ub at ln(M-1): average of min(1, exp(ln(M-1) - sum_k S_k))."""
    return search.eps_ub(log_M_minus_1, batch.sums)


def _check_sample_budget(n_samples: int, epsilon: float):
    if n_samples < 10.0 / epsilon:
        warnings.warn(
            f"N={n_samples} is below the recommended 10/epsilon={10 / epsilon:.0f}; "
            "the tail estimate will be noisy",
            stacklevel=3,
        )


def default_samples(epsilon: float) -> int:
    """Default per-point sample budget: >= 100 expected tail events."""
    return 10_000_000 if epsilon < 1e-4 else 100_000


def dt_rate(cfg: ChannelConfig, n_samples: int | None = None, seed=0) -> BoundPoint:
    """Achievability lower bound on the maximum coding rate (nats/cu).

    Searches the number of active transmit antennas and, for each, bisects
    ln(M-1) for the largest message count with random-coding error <= epsilon
    on a shared sample batch.
    """
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    best = None
    for m_active in range(1, cfg.m_t + 1):
        params = UstmParams.for_config(cfg, m_active)
        sums = sum_over_blocks(
            lambda rng, size: sample_S_block(params, cfg, rng, size),
            cfg.l,
            n_samples,
            seed,
            ("dt", m_active),
        )
        batch = SortedSums(sums)
        a_star = search.dt_threshold(batch, cfg.epsilon)
        rate = float(np.logaddexp(0.0, a_star)) / cfg.n
        if best is None or rate > best[0]:
            best = (rate, m_active, batch, a_star)
    rate, m_opt, batch, a_star = best
    if batch.count_below(a_star) < 10:
        raise InsufficientSamples(
            f"only {batch.count_below(a_star)} sums below the rate threshold; increase N"
        )
    return BoundPoint(
        kind="dt",
        rate_npcu=rate,
        m_active_opt=m_opt,
        mc_std_err=batch.eps_ub_std_err(a_star),
        cfg=cfg,
        samples=n_samples,
    )
