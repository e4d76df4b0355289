"""Nonasymptotic bounds at a single operating point, with baselines.

Computes the achievability (dt) and converse (mc) bounds on the maximum
coding rate for a 2x2 channel at blocklength 168 split into 7 coherence
blocks of 24 channel uses, error probability 1e-3, 6 dB SNR -- together with
the shuffle inner code and the classical outage/ergodic baselines.  Takes
about half a minute at the reduced sample budget used here.
"""

import math
import time

from fblmimo import (
    ChannelConfig,
    alamouti_rates,
    dt_rate,
    ergodic_capacity_lb,
    mc_relaxed_rate,
    outage_capacity,
)

LN2 = math.log(2.0)
cfg = ChannelConfig(n_c=24, l=7, m_t=2, m_r=2, rho=10.0**0.6, epsilon=1e-3)
N = 50_000

print(
    f"n = {cfg.n} ({cfg.l} blocks of {cfg.n_c}), {cfg.m_t}x{cfg.m_r}, "
    f"eps = {cfg.epsilon}, SNR = {10 * math.log10(cfg.rho):.1f} dB, N = {N}\n"
)

t0 = time.time()
rows = [
    ("dt (achievability)", dt_rate(cfg, N)),
    ("mc (converse)", mc_relaxed_rate(cfg, N)),
]
dt_a, mc_a = alamouti_rates(cfg, N)
rows += [
    ("alamouti dt", dt_a),
    ("alamouti mc", mc_a),
    ("outage capacity", outage_capacity(cfg, N)),
    ("ergodic capacity lb", ergodic_capacity_lb(cfg, N)),
]
for label, pt in rows:
    extra = f"  (m_active = {pt.m_active_opt})" if "dt" in pt.kind else ""
    print(
        f"  {label:<22} {pt.rate_npcu / LN2:6.4f} bit/cu "
        f"+/- {3 * pt.mc_std_err / LN2:.4f}{extra}"
    )

print(f"\nelapsed: {time.time() - t0:.1f}s")
print(
    "\nThe finite-blocklength bounds sit well below the outage capacity: at\n"
    "n = 168 the asymptotic baselines overestimate what a real code can do,\n"
    "while the inner code gives up a further fraction of the general bound."
)
