"""Dependence-testing achievability bound."""

import math

import numpy as np
import pytest
import scipy.special as sp

from fblmimo.dt import (
    CHUNK,
    BoundPoint,
    SampleBatch,
    _s_constant,
    dt_error_prob,
    dt_rate,
    sample_S_block,
    sum_over_blocks,
)
from fblmimo.randmat import RngStream, sample_complex_gaussian
from fblmimo.search import InsufficientSamples, SortedSums
from fblmimo.ustm import (
    ChannelConfig,
    UstmParams,
    log_conditional_pdf,
    log_output_pdf,
    log_prefactor,
    log_psi,
)

RHO_REF = 10.0**0.6


def small_cfg(**kw):
    args = dict(n_c=4, l=1, m_t=2, m_r=2, rho=0.1, epsilon=1e-2)
    args.update(kw)
    return ChannelConfig(**args)


class TestDtErrorProb:
    def test_hand_example(self):
        batch = SampleBatch(np.array([2.0, 5.0, 9.0]))
        a = math.log(20.0)
        want = (1.0 + 20.0 * math.exp(-5.0) + 20.0 * math.exp(-9.0)) / 3.0
        assert dt_error_prob(a, batch) == pytest.approx(want, rel=1e-12)

    def test_limits(self):
        batch = SampleBatch(np.array([2.0, 5.0, 9.0]))
        assert dt_error_prob(float("-inf"), batch) == 0.0
        assert dt_error_prob(50.0, batch) == 1.0

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(0)
        batch = SampleBatch(rng.normal(5.0, 3.0, size=1000))
        grid = np.linspace(-10.0, 20.0, 50)
        vals = [dt_error_prob(a, batch) for a in grid]
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)

    def test_rejects_nonfinite_sums(self):
        with pytest.raises(ValueError):
            SampleBatch(np.array([1.0, np.nan]))


class TestSampleS:
    def test_unit_mean_identity_low_snr(self):
        # E[exp(-S)] = 1: the density ratio integrates the conditional law
        cfg = small_cfg()
        for m_active in (1, 2):
            params = UstmParams.for_config(cfg, m_active)
            s = sample_S_block(params, cfg, RngStream(1, m_active).generator(), size=200_000)
            w = np.exp(-s)
            se = w.std() / math.sqrt(w.size)
            assert abs(w.mean() - 1.0) < 4 * se
            assert se < 0.02

    def test_two_route_pathwise_equality(self):
        # formula route vs explicit density-ratio route on the same Z
        cfg = ChannelConfig(n_c=6, l=1, m_t=2, m_r=2, rho=RHO_REF, epsilon=1e-3)
        rng = RngStream(2).generator()
        for m_active in (1, 2):
            params = UstmParams.for_config(cfg, m_active)
            u0 = np.eye(cfg.n_c, m_active, dtype=complex)
            for _ in range(50):
                z = sample_complex_gaussian(cfg.n_c, cfg.m_r, rng)
                y = np.sqrt(params.d_matrix)[:, None] * z
                direct = log_conditional_pdf(y, u0, params, cfg) - log_output_pdf(
                    y, params, cfg
                )
                gram = z.conj().T @ (params.d_matrix[:, None] * z)
                eig = np.linalg.eigvalsh((gram + gram.conj().T) / 2.0)[::-1]
                s = (
                    _s_constant(params, cfg)
                    - float(np.sum(np.abs(z) ** 2))
                    - log_psi(params, cfg, eig).logmag
                )
                assert s == pytest.approx(direct, abs=1e-6)

    def test_siso_mean_matches_quadrature(self):
        # E[S] for n_c=2 single-antenna via 2-D quadrature in (|y1|^2, |y2|^2)
        cfg = ChannelConfig(n_c=2, l=1, m_t=1, m_r=1, rho=RHO_REF, epsilon=1e-3)
        params = UstmParams.for_config(cfg, 1)
        mu = params.mu
        t1 = np.linspace(1e-9, 60.0 * (1.0 + mu), 4001)
        t2 = np.linspace(1e-9, 60.0, 4001)
        g1, g2 = np.meshgrid(t1, t2, indexing="ij")
        dens = np.exp(-g1 / (1.0 + mu)) / (1.0 + mu) * np.exp(-g2)
        log_cond = -2.0 * math.log(math.pi) - math.log1p(mu) - g1 / (1.0 + mu) - g2
        b = g1 + g2
        log_out = (
            log_prefactor(params, cfg)
            + np.log(sp.gammainc(1.0, params.c * b))
            - b / (1.0 + mu)
            - np.log(b)
        )
        mean_s_quad = np.trapezoid(np.trapezoid(dens * (log_cond - log_out), t2, axis=1), t1)
        s = sample_S_block(params, cfg, RngStream(3).generator(), size=400_000)
        se = s.std() / math.sqrt(s.size)
        assert abs(s.mean() - mean_s_quad) < max(4 * se, 0.01 * abs(mean_s_quad))

    def test_scalar_draw(self):
        cfg = small_cfg()
        params = UstmParams.for_config(cfg, 2)
        s = sample_S_block(params, cfg, RngStream(4).generator())
        assert isinstance(s, float) and np.isfinite(s)


class TestSumOverBlocks:
    def test_chunk_prefix_consistency(self):
        # the first CHUNK sums must not depend on the total sample count
        def sampler(rng, size):
            return rng.generator().standard_normal(size)

        full = sum_over_blocks(sampler, 2, CHUNK + 1000, RngStream(5), "lbl")
        short = sum_over_blocks(sampler, 2, CHUNK, RngStream(5), "lbl")
        np.testing.assert_array_equal(full[:CHUNK], short)

    def test_blocks_are_independent_streams(self):
        def sampler(rng, size):
            return rng.generator().standard_normal(size)

        one = sum_over_blocks(sampler, 1, 100, RngStream(6), "lbl")
        two = sum_over_blocks(sampler, 2, 100, RngStream(6), "lbl")
        # the first block's contribution is shared; the second is new
        assert not np.allclose(two, 2 * one)
        assert np.std(two - one) > 0


class TestDtRate:
    def test_deterministic_replay(self):
        cfg = small_cfg(epsilon=1e-2, rho=RHO_REF)
        a = dt_rate(cfg, n_samples=20_000, seed=7)
        b = dt_rate(cfg, n_samples=20_000, seed=7)
        assert a == b
        c = dt_rate(cfg, n_samples=20_000, seed=8)
        assert c.rate_npcu != a.rate_npcu

    def test_threshold_is_maximal(self):
        # recomputing epsilon at a slightly larger rate must exceed the target
        cfg = small_cfg(epsilon=1e-2, rho=RHO_REF)
        pt = dt_rate(cfg, n_samples=20_000, seed=0)
        params = UstmParams.for_config(cfg, pt.m_active_opt)
        sums = sum_over_blocks(
            lambda rng, size: sample_S_block(params, cfg, rng, size),
            cfg.l,
            20_000,
            0,
            ("dt", pt.m_active_opt),
        )
        batch = SampleBatch(sums)
        a_star = math.log(math.expm1(pt.rate_npcu * cfg.n))
        assert dt_error_prob(a_star, batch) <= cfg.epsilon + 1e-12
        assert dt_error_prob(a_star + 1e-6, batch) > cfg.epsilon

    def test_rate_nondecreasing_in_epsilon(self):
        rates = []
        for eps in (1e-3, 1e-2, 1e-1):
            cfg = small_cfg(epsilon=eps, rho=RHO_REF, l=2)
            rates.append(dt_rate(cfg, n_samples=50_000, seed=0).rate_npcu)
        assert rates[0] <= rates[1] <= rates[2]

    def test_insufficient_samples(self):
        cfg = small_cfg(epsilon=1e-3, rho=RHO_REF)
        with pytest.warns(UserWarning, match="below the recommended"):
            with pytest.raises(InsufficientSamples):
                dt_rate(cfg, n_samples=500, seed=0)

    def test_boundpoint_validation(self):
        cfg = small_cfg()
        with pytest.raises(ValueError):
            BoundPoint(kind="dt", rate_npcu=-0.1, m_active_opt=1, mc_std_err=0.0, cfg=cfg)
        with pytest.raises(ValueError):
            BoundPoint(kind="dt", rate_npcu=0.1, m_active_opt=3, mc_std_err=0.0, cfg=cfg)

    def test_reported_error_matches_sorted_sums(self):
        cfg = small_cfg(epsilon=1e-2, rho=RHO_REF)
        pt = dt_rate(cfg, n_samples=20_000, seed=1)
        assert pt.kind == "dt"
        assert pt.samples == 20_000
        assert 0.0 < pt.mc_std_err < cfg.epsilon
