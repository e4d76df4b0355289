"""Hypothesis-testing converse bound with a diagonal power-allocation search.

The converse compares the channel law at a codeword with a given per-block
diagonal power profile against the auxiliary output distribution induced by
unitary inputs on ``m_tilde`` antennas.  Both log-likelihood ratios reduce to
eigenvalue functionals, so the bound is evaluated by Monte Carlo over the
same chunked deterministic streams used by the achievability side.

Two forms are provided: the information-spectrum relaxation (default, cheap)
and the full form that estimates the tail of the ratio under the auxiliary
distribution directly (opt-in; the tail probability decays like e^(-n R), so
it is practical only at small blocklengths).
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import search
from .dt import CHUNK, BoundPoint, _check_sample_budget, default_samples
from .randmat import (
    RngStream,
    eigvals_descending_batch,
    sample_complex_gaussian,
    sample_isotropic_columns,
    sample_scaled_gram,
)
from .search import SortedSums, TailUnderflow
from .ustm import ChannelConfig, UstmParams, _gamma_sums, log_psi_batch

__all__ = [
    "PowerAllocation",
    "telatar_sigma",
    "c_bar",
    "sample_Sbar_block",
    "sample_T_block",
    "mc_relaxed_rate",
    "mc_full_rate",
    "EXHAUSTIVE_MAX_BLOCKS",
]

# per-block exhaustive allocation search is combinatorial; cap it
EXHAUSTIVE_MAX_BLOCKS = 4


def telatar_sigma(m: int, cfg: ChannelConfig) -> np.ndarray:
    """Diagonal power profile: n_c*rho/m on the first m antennas, zero after.

    The trace equals n_c*rho exactly for every m.
    """
    if not 1 <= m <= cfg.m_t:
        raise ValueError(f"m must lie in [1, {cfg.m_t}]")
    sigma = np.zeros(cfg.m_t)
    sigma[:m] = cfg.n_c * cfg.rho / m
    return sigma


@dataclass(frozen=True)
class PowerAllocation:
    """One diagonal profile per coherence block, each a Telatar index."""

    per_block_active: tuple[int, ...]

    def __post_init__(self):
        if len(self.per_block_active) < 1 or any(m < 1 for m in self.per_block_active):
            raise ValueError("need at least one block, all indices >= 1")

    def sigma(self, k: int, cfg: ChannelConfig) -> np.ndarray:
        return telatar_sigma(self.per_block_active[k], cfg)


def _sigma_tilde_diag(sigma: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """Length-n_c diagonal of I + blockdiag(Sigma, 0)."""
    d = np.ones(cfg.n_c)
    d[: cfg.m_t] += sigma
    return d


def c_bar(m_tilde: int, sigma: np.ndarray, cfg: ChannelConfig) -> float:
    """Deterministic offset of the log-likelihood ratio for one block.

    Four terms: the mu powers of the auxiliary density's prefactor, the
    log-determinant of the codeword's column covariance, and the two
    Gamma-product sums.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (cfg.m_t,) or np.any(sigma < 0):
        raise ValueError("sigma must be a nonnegative length-m_t vector")
    if not math.isclose(sigma.sum(), cfg.n_c * cfg.rho, rel_tol=1e-9):
        raise ValueError("allocation must have trace n_c * rho")
    mu = cfg.rho * cfg.n_c / m_tilde
    top, bot = _gamma_sums(cfg.n_c, m_tilde, cfg.m_r)
    return (
        m_tilde * (cfg.n_c - m_tilde) * math.log(mu)
        - m_tilde * (cfg.n_c - m_tilde - cfg.m_r) * math.log1p(mu)
        - cfg.m_r * float(np.sum(np.log1p(sigma)))
        - top
        + bot
    )


def _resample_until_distinct(make_gram, draw, z, gen):
    """Replace draws whose Gram spectrum is degenerate; returns eigenvalues."""
    for _ in range(100):
        lam, bad = eigvals_descending_batch(make_gram(z))
        if not np.any(bad):
            return lam, z
        z[bad] = draw(gen, int(bad.sum()))
    raise RuntimeError("persistent degenerate spectra")


def _scaled_rows(sigma: np.ndarray) -> np.ndarray:
    """The leading strictly-positive run of a Telatar-form profile."""
    sigma = np.asarray(sigma, dtype=float)
    k = int(np.count_nonzero(sigma))
    if np.any(sigma[:k] <= 0) or np.any(sigma[k:] != 0):
        raise ValueError("profile must be positive on a leading run, zero after")
    return sigma[:k]


def sample_Sbar_block(m_tilde: int, sigma: np.ndarray, cfg: ChannelConfig, rng, size=None):
    """Log-likelihood-ratio draws under the codeword distribution, one block.

    Y = Sigma_tilde^(1/2) Z with Z i.i.d. CN(0,1);
    ``Sbar = c_bar - tr(Z^H Z) - ln psi_{m_tilde}(eigs(Z^H Sigma_tilde Z))``.
    Only the power-bearing rows of Z are sampled explicitly; the remaining
    rows enter through their Wishart Gram.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else size
    params = UstmParams.for_config(cfg, m_tilde)
    lam, tr = sample_scaled_gram(_scaled_rows(sigma), cfg.n_c, cfg.m_r, gen, size=n)
    _, logpsi = log_psi_batch(lam, params, cfg.n_c)
    s = c_bar(m_tilde, sigma, cfg) - tr - logpsi
    return float(s[0]) if size is None else s


def sample_T_block(m_tilde: int, sigma: np.ndarray, cfg: ChannelConfig, rng, size=None):
    """Log-likelihood-ratio draws under the auxiliary output law, one block.

    Ybar is generated as a unitary-input transmission on m_tilde antennas
    (sqrt(mu) Phi H + W); with Delta its Gram eigenvalues and U an independent
    isotropic n_c x m_r matrix,
    ``T = c_bar - tr(U Delta U^H Sigma_tilde^(-1)) - ln psi_{m_tilde}(Delta)``.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else size
    sigma = np.asarray(sigma, dtype=float)
    st_inv = 1.0 / _sigma_tilde_diag(sigma, cfg)
    params = UstmParams.for_config(cfg, m_tilde)

    def draw(g, k):
        phi = sample_isotropic_columns(cfg.n_c, m_tilde, g, size=k)
        h = sample_complex_gaussian(m_tilde, cfg.m_r, g, size=k)
        w = sample_complex_gaussian(cfg.n_c, cfg.m_r, g, size=k)
        return math.sqrt(params.mu) * (phi @ h) + w

    y = draw(gen, n)
    gram = lambda y: np.swapaxes(y, -1, -2).conj() @ y
    delta, y = _resample_until_distinct(gram, draw, y, gen)
    u = sample_isotropic_columns(cfg.n_c, cfg.m_r, gen, size=n)
    quad = np.einsum("bi,bti,t->b", delta, np.abs(u) ** 2, st_inv)
    _, logpsi = log_psi_batch(delta, params, cfg.n_c)
    t = c_bar(m_tilde, sigma, cfg) - quad - logpsi
    return float(t[0]) if size is None else t


def _candidate_allocations(cfg: ChannelConfig, mode: str) -> list[PowerAllocation]:
    if mode == "shared":
        return [PowerAllocation((m,) * cfg.l) for m in range(1, cfg.m_t + 1)]
    if mode == "exhaustive":
        if cfg.l > EXHAUSTIVE_MAX_BLOCKS:
            raise ValueError(
                f"exhaustive allocation search is limited to l <= {EXHAUSTIVE_MAX_BLOCKS}"
            )
        return [
            PowerAllocation(t)
            for t in itertools.product(range(1, cfg.m_t + 1), repeat=cfg.l)
        ]
    raise ValueError(f"unknown allocation mode {mode!r}")


def _t_block_draws(m_tilde, m, k, cfg, n_samples, seed):
    """Deterministic (n_samples,) auxiliary-law draws for block k."""
    base = seed if isinstance(seed, RngStream) else RngStream(int(seed))
    sigma = telatar_sigma(m, cfg)
    out = np.empty(n_samples)
    for lo in range(0, n_samples, CHUNK):
        hi = min(lo + CHUNK, n_samples)
        rng = base.child("conv-t", m_tilde, m, k, lo // CHUNK)
        out[lo:hi] = sample_T_block(m_tilde, sigma, cfg, rng, hi - lo)
    return out


def _t_sum_batches(m_tilde, cfg, n_samples, seed, allocations):
    """Summed auxiliary-law draws per candidate allocation."""
    shared = all(len(set(a.per_block_active)) == 1 for a in allocations)
    out = {}
    if shared:
        for alloc in allocations:
            m = alloc.per_block_active[0]
            total = np.zeros(n_samples)
            for k in range(cfg.l):
                total += _t_block_draws(m_tilde, m, k, cfg, n_samples, seed)
            out[alloc] = total
    else:
        cache = {
            (m, k): _t_block_draws(m_tilde, m, k, cfg, n_samples, seed)
            for m in range(1, cfg.m_t + 1)
            for k in range(cfg.l)
        }
        for alloc in allocations:
            out[alloc] = sum(cache[(m, k)] for k, m in enumerate(alloc.per_block_active))
    return out


def _sbar_sum_batches(cfg, n_samples, seed, allocations):
    """{(m_tilde, alloc): summed codeword-law draws}, sharing Gram draws.

    The Gram spectrum and trace of one block depend only on that block's
    Telatar index m; the auxiliary antenna count m_tilde enters only through
    the deterministic offset and psi.  Each (m, block, chunk) triple therefore
    owns one substream and its spectra are reused across every m_tilde, which
    halves the sampling cost of the full m_tilde minimization.  Allocations
    that agree on a block share those draws exactly.
    """
    base = seed if isinstance(seed, RngStream) else RngStream(int(seed))
    m_tildes = range(1, cfg.m_t + 1)
    params = {mt: UstmParams.for_config(cfg, mt) for mt in m_tildes}

    def block(m, k):
        sigma = telatar_sigma(m, cfg)
        consts = {mt: c_bar(mt, sigma, cfg) for mt in m_tildes}
        out = {mt: np.empty(n_samples) for mt in m_tildes}
        for lo in range(0, n_samples, CHUNK):
            hi = min(lo + CHUNK, n_samples)
            rng = base.child("conv-sbar", m, k, lo // CHUNK)
            lam, tr = sample_scaled_gram(
                _scaled_rows(sigma), cfg.n_c, cfg.m_r, rng, size=hi - lo
            )
            for mt in m_tildes:
                _, logpsi = log_psi_batch(lam, params[mt], cfg.n_c)
                out[mt][lo:hi] = consts[mt] - tr - logpsi
        return out

    shared = all(len(set(a.per_block_active)) == 1 for a in allocations)
    result = {}
    if shared:
        for alloc in allocations:
            m = alloc.per_block_active[0]
            totals = {mt: np.zeros(n_samples) for mt in m_tildes}
            for k in range(cfg.l):
                drawn = block(m, k)
                for mt in m_tildes:
                    totals[mt] += drawn[mt]
            for mt in m_tildes:
                result[(mt, alloc)] = totals[mt]
    else:
        cache = {
            (m, k): block(m, k)
            for m in range(1, cfg.m_t + 1)
            for k in range(cfg.l)
        }
        for alloc in allocations:
            for mt in m_tildes:
                result[(mt, alloc)] = sum(
                    cache[(m, k)][mt] for k, m in enumerate(alloc.per_block_active)
                )
    return result


def _alloc_label(alloc: PowerAllocation) -> int:
    """Antenna count reported for an allocation (the most frequent index)."""
    return Counter(alloc.per_block_active).most_common(1)[0][0]


def mc_relaxed_rate(
    cfg: ChannelConfig,
    n_samples: int | None = None,
    seed=0,
    allocation_mode: str = "shared",
) -> BoundPoint:
    """Information-spectrum converse upper bound on the coding rate (nats/cu).

    For each auxiliary antenna count m_tilde and each candidate allocation,
    scans (1/n)[lambda - ln(F_hat(lambda) - eps)] over the empirical order
    statistics of the summed ratios, takes the inf over lambda, the sup over
    allocations, and the min over m_tilde.
    """
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    allocations = _candidate_allocations(cfg, allocation_mode)
    sbar = _sbar_sum_batches(cfg, n_samples, seed, allocations)
    best = None  # min over m_tilde
    for m_tilde in range(1, cfg.m_t + 1):
        inner = None  # sup over allocations
        for alloc in allocations:
            batch = SortedSums(sbar[(m_tilde, alloc)])
            try:
                val, f_hat = search.relaxed_converse_value(batch, cfg.epsilon)
            except search.EmptyFeasible:
                continue
            if inner is None or val > inner[0]:
                inner = (val, alloc, f_hat)
        if inner is None:
            raise search.EmptyFeasible(
                "no allocation admits a feasible threshold; increase N"
            )
        if best is None or inner[0] < best[0]:
            best = inner
    val, alloc, f_hat = best
    se = math.sqrt(f_hat * (1.0 - f_hat) / n_samples) / (f_hat - cfg.epsilon) / cfg.n
    return BoundPoint(
        kind="mc",
        rate_npcu=val / cfg.n,
        m_active_opt=_alloc_label(alloc),
        mc_std_err=se,
        cfg=cfg,
        samples=n_samples,
    )


def mc_full_rate(
    cfg: ChannelConfig,
    n_samples: int | None = None,
    seed=0,
    allocation_mode: str = "shared",
) -> BoundPoint:
    """Full hypothesis-testing converse (opt-in diagnostic form).

    gamma is the empirical epsilon-quantile of the summed ratios under the
    codeword law; the bound is (1/n) ln(1/P_hat) with P_hat the probability
    that the summed ratio under the auxiliary law exceeds gamma.  The tail
    mass shrinks like e^(-n R), so large n needs prohibitive sample sizes.
    """
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    allocations = _candidate_allocations(cfg, allocation_mode)
    sbar = _sbar_sum_batches(cfg, n_samples, seed, allocations)
    best = None
    for m_tilde in range(1, cfg.m_t + 1):
        tsum = _t_sum_batches(m_tilde, cfg, n_samples, seed, allocations)
        inner = None
        for alloc in allocations:
            gamma = float(np.quantile(sbar[(m_tilde, alloc)], cfg.epsilon, method="lower"))
            p_hat = float(np.mean(tsum[alloc] >= gamma))
            if p_hat == 0.0:
                raise TailUnderflow(
                    "no auxiliary-law sample exceeded gamma; increase N or reduce n"
                )
            if n_samples * p_hat < 100:
                warnings.warn(
                    f"only {n_samples * p_hat:.0f} tail samples; the full-form "
                    "estimate is noisy",
                    stacklevel=2,
                )
            val = -math.log(p_hat) / cfg.n
            if inner is None or val > inner[0]:
                inner = (val, alloc, p_hat)
        if best is None or inner[0] < best[0]:
            best = inner
    val, alloc, p_hat = best
    se = math.sqrt((1.0 - p_hat) / (p_hat * n_samples)) / cfg.n
    return BoundPoint(
        kind="mc-full",
        rate_npcu=val,
        m_active_opt=_alloc_label(alloc),
        mc_std_err=se,
        cfg=cfg,
        samples=n_samples,
    )
