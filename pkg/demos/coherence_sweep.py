"""Sweep the coherence interval at fixed blocklength and find the optimum.

At a fixed total blocklength n = 168 there is a tension: long coherence
blocks waste channel uses on implicit channel estimation, short ones give
little time to average over the fading.  This demo runs the sweep driver
over every divisor grid point for a 2x2 channel and prints the resulting
rate profile.  Uses a reduced sample budget; takes about a minute.
"""

import csv
import math
import tempfile

from fblmimo.sweep import SweepSettings, run_sweep

LN2 = math.log(2.0)
settings = SweepSettings(
    n=168,
    m_t=2,
    m_r=2,
    snr_db=6.0,
    epsilon=1e-2,
    samples=20_000,
    seed=0,
    bounds=("dt", "mc"),
    allocation_mode="shared",
    workers=1,
)

out = tempfile.mktemp(suffix=".csv")
run_sweep(settings, out)
with open(out, newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if r["status"] == "ok"]

by_nc = {}
for r in rows:
    by_nc.setdefault(int(r["n_c"]), {})[r["bound"]] = r

print(f"n = 168, 2x2, eps = {settings.epsilon}, SNR = {settings.snr_db} dB\n")
print("  n_c    l   dt [bit/cu]  mc [bit/cu]  m_active")
best = max(by_nc, key=lambda k: float(by_nc[k]["dt"]["rate_npcu"]))
for n_c in sorted(by_nc, reverse=True):
    dt, mc = by_nc[n_c]["dt"], by_nc[n_c]["mc"]
    mark = "  <- best dt" if n_c == best else ""
    print(
        f"  {n_c:>3} {168 // n_c:>4}   {float(dt['rate_bpcu']):.4f}       "
        f"{float(mc['rate_bpcu']):.4f}       {dt['m_active_opt']}{mark}"
    )

print(
    "\nThe optimum sits at an intermediate coherence interval, and the\n"
    "achievability-optimal number of active antennas drops to one once the\n"
    "blocks get short -- estimating two antennas' worth of channel inside a\n"
    "short block costs more than the second antenna contributes."
)
