"""Check the closed-form output densities against a brute-force mixture.

Both noncoherent output densities in this package (the general
unitary-input density and the paired-spectrum density of the shuffle inner
code) are mixtures of Gaussians over a random input direction.  This demo
re-estimates each density at a few output points by averaging the
conditional Gaussian density over many random inputs and compares it with
the closed form.  Runs in a few seconds.
"""

import math

import numpy as np

from fblmimo.alamouti import alamouti_log_pdf, log_conditional_pdf_given_symbols
from fblmimo.randmat import RngStream, sample_complex_gaussian, sample_isotropic_columns
from fblmimo.ustm import ChannelConfig, UstmParams, log_output_pdf

N_MIX = 200_000
cfg = ChannelConfig(n_c=4, l=1, m_t=2, m_r=2, rho=10.0**0.6, epsilon=1e-3)
rng = RngStream(0).generator()

print(f"channel: n_c={cfg.n_c}, {cfg.m_t}x{cfg.m_r}, SNR {10 * math.log10(cfg.rho):.1f} dB")
print(f"mixture oracle: {N_MIX} random input directions per point\n")

print("general unitary-input density")
for m_active in (1, 2):
    params = UstmParams.for_config(cfg, m_active)
    u = sample_isotropic_columns(cfg.n_c, m_active, rng, size=N_MIX)
    uh = np.swapaxes(u, -1, -2).conj()
    const = -cfg.m_r * cfg.n_c * math.log(math.pi) - m_active * cfg.m_r * math.log1p(
        params.mu
    )
    for point in range(3):
        y = 0.8 * sample_complex_gaussian(cfg.n_c, cfg.m_r, rng)
        quad = np.sum(np.abs(y) ** 2) - params.c * np.sum(
            np.abs(uh @ y) ** 2, axis=(-2, -1)
        )
        logs = const - quad
        mx = logs.max()
        est = mx + math.log(np.exp(logs - mx).mean())
        closed = log_output_pdf(y, params, cfg)
        print(
            f"  m_active={m_active} point {point}: ln f closed {closed:+.6f}, "
            f"mixture {est:+.6f}, rel err {abs(math.expm1(closed - est)):.2e}"
        )

print("\nshuffle inner-code density")
u = sample_isotropic_columns(cfg.n_c, 1, rng, size=N_MIX)[..., 0]
for point in range(3):
    y = 0.8 * sample_complex_gaussian(cfg.n_c, cfg.m_r, rng)
    logs = log_conditional_pdf_given_symbols(y, u, cfg)
    mx = logs.max()
    est = mx + math.log(np.exp(logs - mx).mean())
    closed = alamouti_log_pdf(y, cfg)
    print(
        f"  point {point}: ln f closed {closed:+.6f}, mixture {est:+.6f}, "
        f"rel err {abs(math.expm1(closed - est)):.2e}"
    )
