"""Shuffle inner code and its four-antenna switched extension."""

import math

import numpy as np
import pytest
import scipy.special as sp

import fblmimo.alamouti as ala
from fblmimo.alamouti import (
    UnvalidatedDensity,
    _divdiff_mp,
    _log_divdiff_batch,
    _paired_nodes,
    alamouti_dt_rate,
    alamouti_log_pdf,
    alamouti_mc_rate,
    alamouti_rates,
    alamouti_sample_S,
    alamouti_shuffle,
    fstd_rates,
    fstd_subchannel,
    log_conditional_pdf_given_symbols,
)
from fblmimo.randmat import RngStream, sample_complex_gaussian
from fblmimo.search import InsufficientSamples
from fblmimo.ustm import ArgumentError, ChannelConfig

RHO_REF = 10.0**0.6


def inner_cfg(**kw):
    args = dict(n_c=4, l=1, m_t=2, m_r=2, rho=RHO_REF, epsilon=1e-2)
    args.update(kw)
    return ChannelConfig(**args)


class TestShuffle:
    def test_pair_example(self):
        a = np.array([1.0 + 2.0j, 3.0 - 1.0j])
        np.testing.assert_allclose(alamouti_shuffle(a), [3.0 + 1.0j, -1.0 + 2.0j])

    def test_involution_is_negation(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(5, 8)) + 1j * rng.normal(size=(5, 8))
        np.testing.assert_array_equal(alamouti_shuffle(alamouti_shuffle(a)), -a)

    def test_norm_and_orthogonality(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=6) + 1j * rng.normal(size=6)
        b = alamouti_shuffle(a)
        assert np.linalg.norm(b) == np.linalg.norm(a)
        assert abs(np.vdot(a, b)) < 1e-12

    def test_rejects_odd_length(self):
        with pytest.raises(ValueError):
            alamouti_shuffle(np.ones(3))


class TestPairedNodes:
    def test_fast_paths_match_general_route(self):
        rng = RngStream(1).generator()
        c = 0.7
        for m_r in (1, 2):
            y = sample_complex_gaussian(8, m_r, rng, size=40)
            fast, bad = _paired_nodes(y, c)
            assert not bad.any()
            yh = ala._yhat(y)
            g = np.swapaxes(yh, -1, -2).conj() @ yh
            eig = c * np.linalg.eigvalsh(g)[..., ::-1]
            general = (eig[..., 0::2] + eig[..., 1::2]) / 2.0
            np.testing.assert_allclose(fast, general, rtol=1e-10, atol=1e-12)

    def test_general_route_pairs(self):
        # m_r = 3 exercises the eigensolver path with the pairing assertion
        y = sample_complex_gaussian(8, 3, RngStream(2).generator(), size=20)
        nodes, bad = _paired_nodes(y, 0.9)
        assert nodes.shape == (20, 3)
        assert not bad.any()
        assert np.all(np.diff(nodes, axis=-1) < 0)


class TestDividedDifference:
    def test_two_node_closed_form_matches_mp(self):
        rng = np.random.default_rng(3)
        for nu in (0, 1, 4, 40):
            s1 = rng.uniform(5.0, 50.0, size=20)
            s2 = s1 * rng.uniform(0.05, 0.95, size=20)
            nodes = np.stack([s1, s2], axis=-1)
            got = _log_divdiff_batch(nodes, nu)
            want = np.array([_divdiff_mp(row, nu) for row in nodes])
            np.testing.assert_allclose(got, want, rtol=1e-7)

    def test_near_coincident_nodes_stable(self):
        # a tiny gap forces the high-precision fallback; the result must agree
        # with the analytic limit direction (no blow-up, monotone in the gap)
        nu = 2
        base = 10.0
        vals = []
        for gap in (1e-2, 1e-4, 1e-6):
            nodes = np.array([[base + gap, base]])
            vals.append(float(_log_divdiff_batch(nodes, nu)[0]))
        assert all(np.isfinite(vals))
        # as the gap closes the confluent value converges
        assert abs(vals[1] - vals[2]) < abs(vals[0] - vals[1]) + 1e-6

    def test_single_node(self):
        nodes = np.array([[7.0]])
        got = _log_divdiff_batch(nodes, 3)[0]
        want = _divdiff_mp(np.array([7.0]), 3)
        assert got == pytest.approx(want, rel=1e-10)


class TestDensity:
    def test_matches_mixture_oracle_low_snr(self):
        cfg = inner_cfg(rho=0.2)
        rng = RngStream(4).generator()
        n_mc = 200_000
        from fblmimo.randmat import sample_isotropic_columns

        u = sample_isotropic_columns(cfg.n_c, 1, rng, size=n_mc)[..., 0]
        for _ in range(3):
            y = sample_complex_gaussian(cfg.n_c, cfg.m_r, rng)
            closed = alamouti_log_pdf(y, cfg)
            logs = log_conditional_pdf_given_symbols(y, u, cfg)
            mx = logs.max()
            w = np.exp(logs - mx)
            est = mx + math.log(w.mean())
            rse = w.std() / (w.mean() * math.sqrt(n_mc))
            assert abs(math.expm1(closed - est)) < max(5 * rse, 1e-3)

    def test_normalization_quadrature_one_receive_antenna(self):
        # for m_r=1 the density depends on t = ||Y||^2 only; the radial
        # measure constant cancels against the Gaussian base case
        cfg = inner_cfg(m_r=1)
        mu = cfg.rho * cfg.n_c / 2.0
        c = mu / (1.0 + mu)
        t = np.linspace(1e-9, 80.0 * (1.0 + mu), 400_001)
        nodes = (c * t)[:, None]
        logpdf = (
            -t
            - cfg.n_c * math.log(math.pi)
            - 2.0 * math.log1p(mu)
            + sp.gammaln(cfg.n_c)
            + _log_divdiff_batch(nodes, cfg.n_c - 2)
        )
        logmeas = (cfg.n_c - 1) * np.log(t)
        target = np.exp(logpdf + logmeas)
        base = np.exp(-cfg.n_c * math.log(math.pi) - t + logmeas)
        ratio = np.trapezoid(target, t) / np.trapezoid(base, t)
        assert ratio == pytest.approx(1.0, rel=1e-4)

    def test_quaternion_scalar_invariance(self):
        # y -> alpha y + beta A(y) with |alpha|^2+|beta|^2 = 1 preserves the
        # paired spectrum and the trace, hence the pdf
        rng = RngStream(5).generator()
        for m_r in (1, 2):
            cfg = inner_cfg(m_r=m_r, n_c=6)
            y = sample_complex_gaussian(cfg.n_c, m_r, rng)
            base = alamouti_log_pdf(y, cfg)
            alpha, beta = (1.0 + 2.0j) / 3.0, (2.0 / 3.0) * 1.0j  # |a|^2+|b|^2 = 1
            y2 = np.stack(
                [
                    alpha * y[:, j] + beta * alamouti_shuffle(y[:, j])
                    for j in range(m_r)
                ],
                axis=-1,
            )
            assert alamouti_log_pdf(y2, cfg) == pytest.approx(base, abs=1e-9)

    def test_rejects_bad_shape_and_config(self):
        cfg = inner_cfg()
        with pytest.raises(ValueError):
            alamouti_log_pdf(np.zeros((3, 2)), cfg)
        for bad in (
            dict(m_t=1, n_c=4),
            dict(n_c=7, m_r=2, m_t=2),
            dict(n_c=6, m_r=4, m_t=2),
        ):
            args = dict(n_c=4, l=1, m_t=2, m_r=2, rho=1.0, epsilon=1e-2)
            args.update(bad)
            with pytest.raises(ArgumentError):
                alamouti_log_pdf(np.zeros((args["n_c"], args["m_r"])), ChannelConfig(**args))


class TestSampleS:
    def test_unit_mean_identity_low_snr(self):
        for m_r in (1, 2):
            cfg = inner_cfg(rho=0.1, m_r=m_r)
            s = alamouti_sample_S(cfg, RngStream(6).child(m_r).generator(), size=200_000)
            w = np.exp(-s)
            se = w.std() / math.sqrt(w.size)
            assert abs(w.mean() - 1.0) < 4 * se
            assert se < 0.02

    def test_two_route_pathwise_equality(self):
        cfg = inner_cfg(n_c=6)
        n = 200
        z = sample_complex_gaussian(cfg.n_c, cfg.m_r, RngStream(7).generator(), size=n)
        s = alamouti_sample_S(cfg, RngStream(7).generator(), size=n)
        mu = cfg.rho * cfg.n_c / 2.0
        d = np.ones(cfg.n_c)
        d[:2] = 1.0 + mu
        u0 = np.zeros(cfg.n_c, dtype=complex)
        u0[0] = 1.0
        for i in range(n):
            v = np.sqrt(d)[:, None] * z[i]
            direct = log_conditional_pdf_given_symbols(
                v, u0[None], cfg
            )[0] - alamouti_log_pdf(v, cfg)
            assert s[i] == pytest.approx(direct, abs=1e-6)

    def test_mean_positive_at_reference_snr(self):
        cfg = inner_cfg()
        s = alamouti_sample_S(cfg, RngStream(8).generator(), size=50_000)
        assert s.mean() > 4 * s.std() / math.sqrt(s.size)


class TestRates:
    def test_pair_matches_individual_wrappers(self):
        cfg = inner_cfg(n_c=8, l=2)
        dt_pair, mc_pair = alamouti_rates(cfg, n_samples=30_000, seed=0)
        assert dt_pair == alamouti_dt_rate(cfg, n_samples=30_000, seed=0)
        assert mc_pair == alamouti_mc_rate(cfg, n_samples=30_000, seed=0)
        assert dt_pair.rate_npcu <= mc_pair.rate_npcu
        assert dt_pair.kind == "alamouti_dt" and mc_pair.kind == "alamouti_mc"

    def test_insufficient_samples(self):
        cfg = inner_cfg(n_c=8, l=3, epsilon=1e-3)
        with pytest.warns(UserWarning):
            with pytest.raises(InsufficientSamples):
                alamouti_dt_rate(cfg, n_samples=2_000, seed=0)


class TestFstd:
    def test_subchannel_mapping(self):
        cfg = ChannelConfig(n_c=24, l=7, m_t=4, m_r=4, rho=RHO_REF, epsilon=1e-3)
        sub = fstd_subchannel(cfg)
        assert (sub.n_c, sub.l, sub.m_t, sub.m_r) == (12, 14, 2, 4)
        assert sub.rho == pytest.approx(2 * RHO_REF)
        assert sub.n == cfg.n

    def test_mapping_preconditions(self):
        with pytest.raises(ArgumentError):
            fstd_subchannel(
                ChannelConfig(n_c=24, l=1, m_t=2, m_r=2, rho=1.0, epsilon=1e-3)
            )
        with pytest.raises(ArgumentError):
            fstd_subchannel(
                ChannelConfig(n_c=12, l=1, m_t=4, m_r=4, rho=1.0, epsilon=1e-3)
            )

    def test_unvalidated_density_gate(self, monkeypatch):
        cfg = ChannelConfig(n_c=32, l=1, m_t=4, m_r=4, rho=RHO_REF, epsilon=1e-2)
        monkeypatch.setattr(ala, "_density_gate", lambda *a: False)
        with pytest.raises(UnvalidatedDensity):
            fstd_rates(cfg, n_samples=1_000, seed=0)

    def test_rates_pass_gate_and_report_outer_config(self, monkeypatch):
        cfg = ChannelConfig(n_c=32, l=1, m_t=4, m_r=4, rho=RHO_REF, epsilon=1e-2)
        monkeypatch.setattr(ala, "_density_gate", lambda *a: True)
        dt, mc = fstd_rates(cfg, n_samples=20_000, seed=0)
        assert dt.cfg == cfg and mc.cfg == cfg
        assert dt.kind == "fstd_dt" and mc.kind == "fstd_mc"
        assert 0 < dt.rate_npcu <= mc.rate_npcu

    def test_density_gate_accepts_true_density(self):
        # the real oracle gate at the smaller validation shape
        assert ala._density_gate(8, 2, 2 * RHO_REF)
