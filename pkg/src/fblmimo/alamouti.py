"""Orthogonal inner codes: the 2-antenna shuffle scheme and its 4-antenna
frequency-switched extension.

The inner code maps a symbol vector a to the two-column input [a A(a)], where
A is the pairwise shuffle b_{2k-1} = conj(a_{2k}), b_{2k} = -conj(a_{2k-1}).
Because A(a) is orthogonal to a with equal norm, the induced output density
has a closed form: with Yhat = [y_1 A(y_1) ... y_mr A(y_mr)] the Gram
spectrum of Yhat comes in equal pairs, and

    f_Y(Y) = pi^(-mr*nc) (1+mu)^(-2mr) e^(-tr(Y^H Y)) Gamma(nc) D[nodes],

where D[nodes] is the divided difference of exp over the node multiset
{sigma_1 x2, ..., sigma_k x2, 0 x nu}, sigma_i the distinct eigenvalues of
(mu/(1+mu)) Yhat^H Yhat and nu = n_c - 2k.  See docs/shuffle_density.md for
the derivation; the form is locked in by the mixture and normalization
oracles in the test suite (a published variant with the opposite sign on the
Gaussian factor is non-normalizable).

The nu zero nodes are absorbed analytically: D[nodes] equals the confluent
divided difference over the doubled sigma nodes of

    g(y) = sum_{j>=0} y^j / (j+nu)!  =  e^y P(nu, y) / y^nu,

with P the regularized lower incomplete Gamma function.
"""

from __future__ import annotations

import functools
import math
import warnings

import mpmath as mp
import numpy as np
import scipy.special as sp

from . import search
from .dt import BoundPoint, _check_sample_budget, default_samples, sum_over_blocks
from .randmat import (
    DEGENERACY_RTOL,
    RngStream,
    sample_complex_gaussian,
    sample_isotropic_columns,
)
from .search import InsufficientSamples, SortedSums
from .special import log_reg_inc_gamma_lower, signed_logdet_from_logs
from .ustm import ArgumentError, ChannelConfig, NegativeDensity

__all__ = [
    "UnvalidatedDensity",
    "alamouti_shuffle",
    "alamouti_log_pdf",
    "alamouti_sample_S",
    "alamouti_dt_rate",
    "alamouti_mc_rate",
    "alamouti_rates",
    "fstd_rates",
    "fstd_subchannel",
]

LOG_PI = math.log(math.pi)

# relative eigenvalue-pair mismatch that indicates a bookkeeping bug
PAIRING_RTOL = 1e-8
# below this relative gap between distinct nodes, double precision loses too
# many digits in the confluent determinant and the draw goes to mpmath
GAP_RTOL = 1e-3


class UnvalidatedDensity(RuntimeError):
    """The generalized output density failed its Monte Carlo oracle gate."""


def _check_inner_cfg(cfg: ChannelConfig):
    if cfg.m_t != 2:
        raise ArgumentError("the inner code drives exactly two transmit antennas")
    if cfg.n_c % 2 != 0 or cfg.n_c < 4:
        raise ArgumentError("need an even coherence interval n_c >= 4")
    if cfg.n_c < 2 * cfg.m_r:
        raise ArgumentError("need n_c >= 2*m_r for the paired-spectrum density")


def alamouti_shuffle(a: np.ndarray) -> np.ndarray:
    """Pairwise shuffle A(a): (a_1, a_2, ...) -> (a_2*, -a_1*, ...).

    Acts on the last axis, which must have even length.  A(A(a)) = -a and
    ||A(a)|| = ||a|| exactly; A(a) is orthogonal to a.
    """
    a = np.asarray(a)
    if a.shape[-1] % 2 != 0:
        raise ValueError("shuffle needs an even-length vector")
    b = np.empty_like(a, dtype=complex)
    b[..., 0::2] = np.conj(a[..., 1::2])
    b[..., 1::2] = -np.conj(a[..., 0::2])
    return b


def _yhat(Y: np.ndarray) -> np.ndarray:
    """Interleave each column y_j of (..., n_c, m_r) with its shuffle."""
    shuf = alamouti_shuffle(np.swapaxes(Y, -1, -2))  # (..., m_r, n_c)
    out = np.empty(Y.shape[:-1] + (2 * Y.shape[-1],), dtype=complex)
    out[..., 0::2] = Y
    out[..., 1::2] = np.swapaxes(shuf, -1, -2)
    return out


def _paired_nodes(Y: np.ndarray, c: float):
    """Distinct (paired) eigenvalues of c * Yhat^H Yhat, descending.

    Returns (nodes, bad): nodes of shape (..., m_r) as pair means, and a mask
    of draws whose distinct nodes (nearly) coincide and must be resampled.
    Raises if the within-pair match is worse than 1e-8 relative, which would
    indicate a shuffle bookkeeping bug rather than bad luck.
    """
    if Y.shape[-1] == 1:
        nodes = c * np.sum(np.abs(Y) ** 2, axis=(-2, -1), keepdims=True)[..., 0]
    elif Y.shape[-1] == 2:
        # the 4x4 Gram of [y1 A(y1) y2 A(y2)] is the complex image of a 2x2
        # quaternion Hermitian matrix; its doubled spectrum is closed form
        y1, y2 = Y[..., 0], Y[..., 1]
        a = np.sum(np.abs(y1) ** 2, axis=-1)
        b = np.sum(np.abs(y2) ** 2, axis=-1)
        qsq = (
            np.abs(np.sum(np.conj(y1) * y2, axis=-1)) ** 2
            + np.abs(np.sum(np.conj(alamouti_shuffle(y1)) * y2, axis=-1)) ** 2
        )
        disc = np.sqrt(((a - b) / 2.0) ** 2 + qsq)
        nodes = c * np.stack([(a + b) / 2.0 + disc, (a + b) / 2.0 - disc], axis=-1)
    else:
        yh = _yhat(Y)
        g = np.swapaxes(yh, -1, -2).conj() @ yh
        eig = np.linalg.eigvalsh((g + np.swapaxes(g, -1, -2).conj()) / 2.0)[..., ::-1]
        eig = c * eig
        hi, lo = eig[..., 0::2], eig[..., 1::2]
        if np.max(np.abs(hi - lo) / np.maximum(np.abs(hi), 1e-300)) > PAIRING_RTOL:
            raise ArgumentError("Gram eigenvalues failed to pair; shuffle mismatch")
        nodes = (hi + lo) / 2.0
    if nodes.shape[-1] > 1:
        gap = nodes[..., :-1] - nodes[..., 1:]
        bad = np.any(gap <= DEGENERACY_RTOL * nodes[..., :1], axis=-1)
    else:
        bad = np.zeros(nodes.shape[:-1], dtype=bool)
    bad |= nodes[..., -1] <= 0
    return nodes, bad


def _log_g_gprime(sigma: np.ndarray, nu: int):
    """(ln g, ln g') for g(y) = sum_j y^j/(j+nu)!, elementwise, y > 0.

    For y > nu the closed form g = e^y P(nu,y) y^(-nu) and
    g' = g (1 - nu/y) + 1/(Gamma(nu) y) is stable (both summands positive);
    for y <= nu the positive power series avoids the cancellation between
    those two summands.
    """
    sigma = np.asarray(sigma, dtype=float)
    if nu == 0:
        return sigma.copy(), sigma.copy()
    log_g = np.empty_like(sigma)
    log_gp = np.empty_like(sigma)
    small = sigma <= nu
    if np.any(small):
        x = sigma[small]
        t = np.ones_like(x)
        tot_g = np.ones_like(x)
        u = np.full_like(x, 1.0 / (nu + 1))
        tot_gp = u.copy()
        for j in range(1, 100_000):
            t = t * x / (nu + j)
            tot_g += t
            u = u * x * (j + 1) / (j * (nu + j + 1))
            tot_gp += u
            if np.all(t < 1e-18 * tot_g) and np.all(u < 1e-18 * tot_gp):
                break
        lgnu1 = sp.gammaln(nu + 1.0)
        log_g[small] = np.log(tot_g) - lgnu1
        log_gp[small] = np.log(tot_gp) - lgnu1
    big = ~small
    if np.any(big):
        x = sigma[big]
        lg = x + log_reg_inc_gamma_lower(float(nu), x) - nu * np.log(x)
        log_g[big] = lg
        log_gp[big] = np.logaddexp(
            lg + np.log1p(-nu / x), -sp.gammaln(float(nu)) - np.log(x)
        )
    return log_g, log_gp


def _divdiff_log_entries(nodes: np.ndarray, nu: int) -> np.ndarray:
    """ln of the 2k x 2k confluent determinant entries (all nonnegative).

    Per distinct node sigma the two rows are the monomials
    [1, sigma, ..., sigma^(2k-2), g(sigma)] and their derivatives
    [0, 1, 2 sigma, ..., (2k-2) sigma^(2k-3), g'(sigma)].
    """
    k = nodes.shape[-1]
    n = 2 * k
    logs = np.log(nodes)
    lg, lgp = _log_g_gprime(nodes, nu)
    out = np.full(nodes.shape[:-1] + (n, n), -np.inf)
    j = np.arange(n - 1, dtype=float)
    out[..., 0::2, : n - 1] = j * logs[..., :, None]
    with np.errstate(divide="ignore"):
        out[..., 1::2, 1 : n - 1] = (
            np.log(j[1:]) + (j[1:] - 1.0) * logs[..., :, None]
        )
    out[..., 0::2, n - 1] = lg
    out[..., 1::2, n - 1] = lgp
    return out


def _divdiff_mp(nodes: np.ndarray, nu: int) -> float:
    """High-precision confluent divided difference for one node vector.

    Uses the Opitz identity: the divided difference of exp over the node
    multiset {sigma_1 x2, ..., sigma_k x2, 0 x nu} is the bottom-left entry of
    exp(Z) with Z bidiagonal (nodes on the diagonal, ones below it).  Z is
    entrywise nonnegative, so every term of the exponential series is
    positive and no precision is lost to cancellation at any node spread.
    """
    n = 2 * len(nodes) + nu
    diag = [float(s) for s in nodes for _ in range(2)] + [0.0] * nu
    with mp.workdps(50):
        z = mp.zeros(n, n)
        for i in range(n):
            z[i, i] = mp.mpf(diag[i])
            if i:
                z[i, i - 1] = mp.mpf(1)
        val = mp.expm(z)[n - 1, 0]
        if val <= 0:
            return float("-inf")
        return float(mp.log(val))


def _log_divdiff_batch(nodes: np.ndarray, nu: int) -> np.ndarray:
    """ln D[nodes doubled, 0 x nu] for batches of distinct descending nodes."""
    nodes = np.asarray(nodes, dtype=float)
    k = nodes.shape[-1]
    if k == 1:
        # single doubled node: the divided difference is g'(sigma)
        _, out = _log_g_gprime(nodes[..., 0], nu)
        return out
    if k == 2:
        # two doubled nodes: [g](s1,s1,s2,s2) =
        # (g'(s1) + g'(s2) - 2 (g(s1)-g(s2))/(s1-s2)) / (s1-s2)^2
        lg, lgp = _log_g_gprime(nodes, nu)
        gap = nodes[..., 0] - nodes[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_a = np.logaddexp(lgp[..., 0], lgp[..., 1])
            log_b = (
                math.log(2.0)
                + lg[..., 0]
                + np.log1p(-np.exp(lg[..., 1] - lg[..., 0]))
                - np.log(gap)
            )
            out = log_a + np.log1p(-np.exp(log_b - log_a)) - 2.0 * np.log(gap)
        shaky = ~np.isfinite(out) | (gap < GAP_RTOL * nodes[..., 0])
    else:
        sign, logdet = signed_logdet_from_logs(_divdiff_log_entries(nodes, nu))
        iu, ju = np.triu_indices(k, k=1)
        gaps = nodes[..., iu] - nodes[..., ju]
        out = logdet - 4.0 * np.sum(np.log(gaps), axis=-1)
        shaky = (sign != 1) | np.any(gaps < GAP_RTOL * nodes[..., :1], axis=-1)
    if np.any(shaky):
        for idx in np.argwhere(shaky):
            out[tuple(idx)] = _divdiff_mp(nodes[tuple(idx)], nu)
    return out


def _log_pdf_from_nodes(nodes, tr_yhy, cfg: ChannelConfig):
    mu = cfg.rho * cfg.n_c / 2.0
    nu = cfg.n_c - 2 * nodes.shape[-1]
    return (
        -tr_yhy
        - cfg.m_r * cfg.n_c * LOG_PI
        - 2 * cfg.m_r * math.log1p(mu)
        + sp.gammaln(cfg.n_c)
        + _log_divdiff_batch(nodes, nu)
    )


def alamouti_log_pdf(Y: np.ndarray, cfg: ChannelConfig) -> float:
    """ln f_Y(Y) under the shuffle inner code with isotropic symbol vectors."""
    _check_inner_cfg(cfg)
    Y = np.asarray(Y, dtype=complex)
    if Y.shape != (cfg.n_c, cfg.m_r):
        raise ValueError(f"Y must be {cfg.n_c} x {cfg.m_r}")
    mu = cfg.rho * cfg.n_c / 2.0
    nodes, bad = _paired_nodes(Y[None], mu / (1.0 + mu))
    if bad[0]:
        raise NegativeDensity("coincident distinct eigenvalues; pdf form is singular")
    lp = _log_pdf_from_nodes(nodes, np.sum(np.abs(Y) ** 2), cfg)
    if not np.isfinite(lp[0]):
        raise NegativeDensity("divided-difference determinant evaluated non-positive")
    return float(lp[0])


def log_conditional_pdf_given_symbols(Y, u, cfg: ChannelConfig):
    """ln f_{Y|a}(Y) for a unit symbol direction u (batched over u).

    The input [sqrt(mu) u, sqrt(mu) A(u)] has orthogonal equal-norm columns,
    so the inverse covariance is I - c (u u^H + A(u) A(u)^H).
    """
    _check_inner_cfg(cfg)
    mu = cfg.rho * cfg.n_c / 2.0
    c = mu / (1.0 + mu)
    au = alamouti_shuffle(u)
    quad = np.sum(np.abs(np.conj(u) @ Y) ** 2, axis=-1) + np.sum(
        np.abs(np.conj(au) @ Y) ** 2, axis=-1
    )
    return (
        -cfg.m_r * cfg.n_c * LOG_PI
        - 2 * cfg.m_r * math.log1p(mu)
        - np.sum(np.abs(Y) ** 2)
        + c * quad
    )


def alamouti_sample_S(cfg: ChannelConfig, rng, size=None):
    """Information-density draws for one inner-code block.

    V = D^(1/2) Z with D = diag(1+mu, 1+mu, 1, ..., 1);
    ``S = tr(Z^H D Z) - tr(Z^H Z) - ln Gamma(n_c) - ln D[nodes(V)]``.
    """
    _check_inner_cfg(cfg)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    n = 1 if size is None else size
    mu = cfg.rho * cfg.n_c / 2.0
    c = mu / (1.0 + mu)
    d = np.ones(cfg.n_c)
    d[:2] = 1.0 + mu
    sqd = np.sqrt(d)[:, None]
    z = sample_complex_gaussian(cfg.n_c, cfg.m_r, gen, size=n)
    for _ in range(100):
        nodes, bad = _paired_nodes(sqd * z, c)
        if not np.any(bad):
            break
        z[bad] = sample_complex_gaussian(cfg.n_c, cfg.m_r, gen, size=int(bad.sum()))
    else:
        raise RuntimeError("persistent degenerate spectra")
    zsq = np.abs(z) ** 2
    s = (
        np.sum((d[:, None] - 1.0) * zsq, axis=(1, 2))
        - sp.gammaln(cfg.n_c)
        - _log_divdiff_batch(nodes, cfg.n_c - 2 * cfg.m_r)
    )
    return float(s[0]) if size is None else s


def _inner_sums(cfg: ChannelConfig, n_samples: int, seed) -> SortedSums:
    sums = sum_over_blocks(
        lambda rng, size: alamouti_sample_S(cfg, rng, size),
        cfg.l,
        n_samples,
        seed,
        ("ala",),
    )
    return SortedSums(sums)


def _dt_from_batch(batch: SortedSums, cfg, n_samples: int, kind: str) -> BoundPoint:
    a_star = search.dt_threshold(batch, cfg.epsilon)
    if batch.count_below(a_star) < 10:
        raise InsufficientSamples("too few sums below the rate threshold; increase N")
    return BoundPoint(
        kind=kind,
        rate_npcu=float(np.logaddexp(0.0, a_star)) / cfg.n,
        m_active_opt=2,
        mc_std_err=batch.eps_ub_std_err(a_star),
        cfg=cfg,
        samples=n_samples,
    )


def _mc_from_batch(batch: SortedSums, cfg, n_samples: int, kind: str) -> BoundPoint:
    val, f_hat = search.relaxed_converse_value(batch, cfg.epsilon)
    se = (
        math.sqrt(f_hat * (1.0 - f_hat) / n_samples)
        / (f_hat - cfg.epsilon)
        / cfg.n
    )
    return BoundPoint(
        kind=kind,
        rate_npcu=val / cfg.n,
        m_active_opt=2,
        mc_std_err=se,
        cfg=cfg,
        samples=n_samples,
    )


def alamouti_rates(
    cfg: ChannelConfig, n_samples: int | None = None, seed=0, kind_prefix: str = "alamouti"
) -> tuple[BoundPoint, BoundPoint]:
    """(achievability, converse) bounds from one shared sample batch.

    Both bounds are functionals of the same information-density sums, so
    evaluating them together halves the sampling cost.
    """
    _check_inner_cfg(cfg)
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    batch = _inner_sums(cfg, n_samples, seed)
    return (
        _dt_from_batch(batch, cfg, n_samples, f"{kind_prefix}_dt"),
        _mc_from_batch(batch, cfg, n_samples, f"{kind_prefix}_mc"),
    )


def alamouti_dt_rate(
    cfg: ChannelConfig, n_samples: int | None = None, seed=0, kind: str = "alamouti_dt"
) -> BoundPoint:
    """Achievability lower bound for the inner code (nats per channel use)."""
    _check_inner_cfg(cfg)
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    return _dt_from_batch(_inner_sums(cfg, n_samples, seed), cfg, n_samples, kind)


def alamouti_mc_rate(
    cfg: ChannelConfig, n_samples: int | None = None, seed=0, kind: str = "alamouti_mc"
) -> BoundPoint:
    """Converse upper bound for the inner code via the same S statistic."""
    _check_inner_cfg(cfg)
    if n_samples is None:
        n_samples = default_samples(cfg.epsilon)
    _check_sample_budget(n_samples, cfg.epsilon)
    return _mc_from_batch(_inner_sums(cfg, n_samples, seed), cfg, n_samples, kind)


def fstd_subchannel(cfg: ChannelConfig) -> ChannelConfig:
    """Map a 4-antenna channel to its switched 2-antenna sub-channel.

    Each coherence block is split in half, with one antenna pair active per
    half at double power: (n_c, l, rho) -> (n_c/2, 2l, 2 rho).
    """
    if cfg.m_t != 4 or cfg.m_r != 4:
        raise ArgumentError("the switched scheme is defined for 4x4 channels")
    if cfg.n_c % 2 != 0:
        raise ArgumentError("n_c must be even to split into halves")
    sub_nc = cfg.n_c // 2
    if sub_nc % 2 != 0 or sub_nc < 2 * cfg.m_r:
        raise ArgumentError(
            f"sub-channel coherence {sub_nc} must be even and >= {2 * cfg.m_r}"
        )
    return ChannelConfig(
        n_c=sub_nc,
        l=2 * cfg.l,
        m_t=2,
        m_r=cfg.m_r,
        rho=2.0 * cfg.rho,
        epsilon=cfg.epsilon,
    )


@functools.lru_cache(maxsize=None)
def _density_gate(n_c: int, m_r: int, rho: float) -> bool:
    """Mixture-oracle gate for the generalized paired-spectrum density.

    Compares the closed form against E_u[f_{Y|a=u}(Y)] over isotropic unit
    symbol directions at a handful of output points.  Cached per shape.
    """
    cfg = ChannelConfig(n_c=n_c, l=1, m_t=2, m_r=m_r, rho=rho, epsilon=1e-3)
    rng = RngStream(20240601, 1).generator()
    n_draws = 200_000
    u = sample_isotropic_columns(n_c, 1, rng, size=n_draws)[..., 0]
    for _ in range(4):
        Y = 0.8 * sample_complex_gaussian(n_c, m_r, rng)
        closed = alamouti_log_pdf(Y, cfg)
        logs = log_conditional_pdf_given_symbols(Y, u, cfg)
        mx = logs.max()
        w = np.exp(logs - mx)
        est = mx + math.log(w.mean())
        rel_se = w.std() / math.sqrt(n_draws) / w.mean()
        if abs(math.expm1(closed - est)) > max(0.02, 4.0 * rel_se):
            return False
    return True


def fstd_rates(
    cfg: ChannelConfig, n_samples: int | None = None, seed=0
) -> tuple[BoundPoint, BoundPoint]:
    """(achievability, converse) bounds for the 4-antenna switched scheme.

    The generalized density has no published closed form, so it is gated
    behind the mixture oracle at sub-channel coherence 8 and 12 before any
    rate is reported.
    """
    sub = fstd_subchannel(cfg)
    for gate_nc in (8, 12):
        if not _density_gate(gate_nc, cfg.m_r, sub.rho):
            raise UnvalidatedDensity(
                f"paired-spectrum density failed its oracle at n_c={gate_nc}"
            )
    dt, mc = alamouti_rates(sub, n_samples, seed, kind_prefix="fstd")
    fix = lambda bp: BoundPoint(
        kind=bp.kind,
        rate_npcu=bp.rate_npcu,
        m_active_opt=2,
        mc_std_err=bp.mc_std_err,
        cfg=cfg,
        samples=bp.samples,
    )
    return fix(dt), fix(mc)
