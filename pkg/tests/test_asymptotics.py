"""Infinite-blocklength baselines."""

import math

import numpy as np
import pytest

from fblmimo.asymptotics import (
    ergodic_capacity_lb,
    high_snr_prelog,
    m_star,
    outage_capacity,
    outage_prob,
)
from fblmimo.ustm import ChannelConfig

RHO_REF = 10.0**0.6


def siso_cfg(**kw):
    args = dict(n_c=2, l=1, m_t=1, m_r=1, rho=RHO_REF, epsilon=1e-1)
    args.update(kw)
    return ChannelConfig(**args)


class TestHighSnrConstants:
    def test_m_star_examples(self):
        assert m_star(2, 2, 168) == 2
        assert m_star(4, 4, 3) == 1
        assert m_star(8, 2, 10) == 2

    def test_prelog_examples(self):
        assert high_snr_prelog(2, 2, 24) == pytest.approx(2 * (1 - 2 / 24), rel=1e-15)
        assert high_snr_prelog(1, 1, 2) == pytest.approx(0.5, rel=1e-15)

    def test_domain(self):
        with pytest.raises(ValueError):
            m_star(0, 1, 4)
        with pytest.raises(ValueError):
            high_snr_prelog(1, 1, 1)


class TestOutageProb:
    def test_zero_rate(self):
        cfg = siso_cfg()
        p, se = outage_prob(0.0, (1,), cfg, n_samples=1000, seed=0)
        assert p == 0.0 and se == 0.0

    def test_vanishing_snr(self):
        cfg = siso_cfg(rho=1e-9)
        p, _ = outage_prob(0.5, (1,), cfg, n_samples=1000, seed=0)
        assert p == 1.0

    def test_siso_closed_form(self):
        # Pr{ln(1 + rho |h|^2) <= R} = 1 - exp(-(e^R - 1)/rho)
        cfg = siso_cfg()
        for rate in (0.5, 1.5, 3.0):
            p, se = outage_prob(rate, (1,), cfg, n_samples=200_000, seed=1)
            want = 1.0 - math.exp(-math.expm1(rate) / cfg.rho)
            assert abs(p - want) < max(4 * se, 1e-4)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            outage_prob(-1.0, (1,), siso_cfg(), n_samples=10)


class TestOutageCapacity:
    def test_siso_closed_form(self):
        # C_out = ln(1 + rho ln(1/(1-eps)))
        for eps in (1e-1, 1e-2):
            cfg = siso_cfg(epsilon=eps)
            pt = outage_capacity(cfg, n_samples=500_000, seed=0)
            want = math.log1p(cfg.rho * math.log(1.0 / (1.0 - eps)))
            assert pt.rate_npcu == pytest.approx(want, abs=max(4 * pt.mc_std_err, 1e-3))

    def test_monotone_in_epsilon(self):
        rates = [
            outage_capacity(siso_cfg(epsilon=eps), n_samples=100_000, seed=0).rate_npcu
            for eps in (1e-2, 5e-2, 2e-1)
        ]
        assert rates[0] < rates[1] < rates[2]

    def test_2x2_matches_dense_grid_oracle(self):
        # brute-force CDF inversion on the same mutual-information samples
        cfg = ChannelConfig(n_c=4, l=1, m_t=2, m_r=2, rho=RHO_REF, epsilon=1e-1)
        pt = outage_capacity(cfg, n_samples=100_000, seed=2)
        from fblmimo.asymptotics import _mutual_info_sums
        from fblmimo.converse import PowerAllocation

        best = 0.0
        for m in (1, 2):
            mi = np.sort(_mutual_info_sums(PowerAllocation((m,)), cfg, 100_000, 2))
            idx = int(math.floor(cfg.epsilon * 100_000))
            # largest rate with empirical CDF <= eps
            best = max(best, float(mi[idx]))
        assert pt.rate_npcu == pytest.approx(best, rel=1e-2)

    def test_exhaustive_mode_cap(self):
        cfg = siso_cfg(l=6)
        with pytest.raises(ValueError):
            outage_capacity(cfg, n_samples=100, allocation_mode="exhaustive")

    def test_deterministic_replay(self):
        cfg = ChannelConfig(n_c=4, l=2, m_t=2, m_r=2, rho=RHO_REF, epsilon=1e-1)
        a = outage_capacity(cfg, n_samples=50_000, seed=3)
        b = outage_capacity(cfg, n_samples=50_000, seed=3)
        assert a == b


class TestErgodicLowerBound:
    def test_deterministic_replay(self):
        cfg = ChannelConfig(n_c=8, l=1, m_t=2, m_r=2, rho=RHO_REF, epsilon=1e-3)
        a = ergodic_capacity_lb(cfg, n_samples=20_000, seed=0)
        b = ergodic_capacity_lb(cfg, n_samples=20_000, seed=0)
        assert a == b
        assert a.kind == "ergodic" and a.m_active_opt in (1, 2)

    def test_monotone_in_snr(self):
        rates = []
        for rho in (0.5, 2.0, 8.0):
            cfg = ChannelConfig(n_c=8, l=1, m_t=2, m_r=2, rho=rho, epsilon=1e-3)
            rates.append(ergodic_capacity_lb(cfg, n_samples=50_000, seed=0).rate_npcu)
        assert rates[0] < rates[1] < rates[2]

    def test_siso_matches_quadrature(self):
        # E[S]/n_c for n_c=2 single antenna against 2-D quadrature
        import scipy.special as sp

        from fblmimo.ustm import UstmParams, log_prefactor

        cfg = siso_cfg(epsilon=1e-3)
        params = UstmParams.for_config(cfg, 1)
        mu = params.mu
        t1 = np.linspace(1e-9, 60.0 * (1.0 + mu), 3001)
        t2 = np.linspace(1e-9, 60.0, 3001)
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
        want = np.trapezoid(np.trapezoid(dens * (log_cond - log_out), t2, axis=1), t1) / cfg.n_c
        pt = ergodic_capacity_lb(cfg, n_samples=400_000, seed=1)
        assert pt.rate_npcu == pytest.approx(want, rel=1e-2)
