"""Command-line sweep driver.

Enumerates the (n_c, l) factorizations of a blocklength, evaluates the
requested bounds at every grid point, and writes one CSV row per
(point, bound).  Reruns with the same configuration and seed produce a
byte-identical file regardless of worker count: every grid point derives its
own random substream from (seed, n_c, l), and rows are assembled in a fixed
order after all points complete.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .alamouti import alamouti_dt_rate, alamouti_mc_rate, alamouti_rates, fstd_rates
from .asymptotics import ergodic_capacity_lb, outage_capacity
from .converse import mc_full_rate, mc_relaxed_rate
from .dt import BoundPoint, dt_rate
from .randmat import RngStream
from .ustm import ChannelConfig

__all__ = ["EmptyGrid", "ConfigError", "enumerate_grid", "run_sweep", "main"]

CSV_COLUMNS = [
    "n",
    "n_c",
    "l",
    "m_t",
    "m_r",
    "snr_db",
    "epsilon",
    "bound",
    "m_active_opt",
    "rate_npcu",
    "rate_bpcu",
    "mc_std_err",
    "samples",
    "seed",
    "status",
]

GENERAL_BOUNDS = ("dt", "mc", "mc_full", "outage", "ergodic")
INNER_BOUNDS = ("alamouti_dt", "alamouti_mc", "fstd_dt", "fstd_mc")
KNOWN_BOUNDS = GENERAL_BOUNDS + INNER_BOUNDS


class EmptyGrid(ValueError):
    """No coherence-interval divisor of n satisfies the constraints."""


class ConfigError(ValueError):
    """Invalid or incomplete sweep configuration."""


def enumerate_grid(
    n: int, template: ChannelConfig, inner_only: bool = False
) -> list[ChannelConfig]:
    """All ChannelConfigs with n_c * l = n, ascending in l.

    Divisors with n_c < m_t + m_r are dropped; with ``inner_only`` the grid
    is further restricted to even n_c >= 4 (the inner-code validity region).
    """
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    for l in range(1, n + 1):
        if n % l != 0:
            continue
        n_c = n // l
        if n_c < template.m_t + template.m_r:
            continue
        if inner_only and (n_c % 2 != 0 or n_c < 4):
            continue
        out.append(
            ChannelConfig(
                n_c=n_c,
                l=l,
                m_t=template.m_t,
                m_r=template.m_r,
                rho=template.rho,
                epsilon=template.epsilon,
            )
        )
    if not out:
        raise EmptyGrid(f"no divisor of n={n} admits n_c >= {template.m_t + template.m_r}")
    return out


def _eligible(kind: str, cfg: ChannelConfig) -> bool:
    if kind in ("alamouti_dt", "alamouti_mc"):
        return cfg.m_t == 2 and cfg.n_c % 2 == 0 and cfg.n_c >= max(4, 2 * cfg.m_r)
    if kind in ("fstd_dt", "fstd_mc"):
        return (
            cfg.m_t == 4
            and cfg.m_r == 4
            and cfg.n_c % 4 == 0
            and cfg.n_c // 2 >= 2 * cfg.m_r
        )
    return True


def _evaluate(kinds, cfg, n_samples, seed_stream, allocation_mode):
    """{kind: BoundPoint} for the requested bounds at one grid point.

    Bound pairs that are functionals of one shared sample batch (the two
    inner-code bounds, and the two switched-scheme bounds) are evaluated
    together so the batch is sampled once.
    """
    out = {}
    kinds = set(kinds)
    if {"alamouti_dt", "alamouti_mc"} <= kinds:
        out["alamouti_dt"], out["alamouti_mc"] = alamouti_rates(
            cfg, n_samples, seed_stream
        )
    if {"fstd_dt", "fstd_mc"} & kinds:
        dt_bp, mc_bp = fstd_rates(cfg, n_samples, seed_stream)
        out["fstd_dt"], out["fstd_mc"] = dt_bp, mc_bp
    for kind in sorted(kinds - set(out)):
        if kind == "dt":
            out[kind] = dt_rate(cfg, n_samples, seed_stream)
        elif kind == "mc":
            out[kind] = mc_relaxed_rate(cfg, n_samples, seed_stream, allocation_mode)
        elif kind == "mc_full":
            out[kind] = mc_full_rate(cfg, n_samples, seed_stream, allocation_mode)
        elif kind == "alamouti_dt":
            out[kind] = alamouti_dt_rate(cfg, n_samples, seed_stream)
        elif kind == "alamouti_mc":
            out[kind] = alamouti_mc_rate(cfg, n_samples, seed_stream)
        elif kind == "outage":
            out[kind] = outage_capacity(cfg, n_samples, seed_stream, allocation_mode)
        elif kind == "ergodic":
            out[kind] = ergodic_capacity_lb(cfg, n_samples, seed_stream)
        else:
            raise ConfigError(f"unknown bound kind {kind!r}")
    return {k: v for k, v in out.items() if k in kinds}


@dataclass(frozen=True)
class SweepSettings:
    n: int
    m_t: int
    m_r: int
    snr_db: float
    epsilon: float
    samples: int | None
    seed: int
    bounds: tuple[str, ...]
    allocation_mode: str
    workers: int

    @property
    def rho(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


def _empty_row(base, status):
    return {
        **base,
        "m_active_opt": "",
        "rate_npcu": "",
        "rate_bpcu": "",
        "mc_std_err": "",
        "samples": "",
        "status": status,
    }


def _task(args):
    """All bound evaluations at one grid point; returns CSV row dicts.

    Eligible bounds are evaluated in groups that can share a sample batch; a
    failure inside one group becomes error rows for that group only.
    """
    settings, cfg, kinds = args

    def base(kind):
        return {
            "n": settings.n,
            "n_c": cfg.n_c,
            "l": cfg.l,
            "m_t": cfg.m_t,
            "m_r": cfg.m_r,
            "snr_db": repr(settings.snr_db),
            "epsilon": repr(settings.epsilon),
            "bound": kind,
            "seed": settings.seed,
        }

    rows = []
    eligible = []
    for kind in kinds:
        if _eligible(kind, cfg):
            eligible.append(kind)
        else:
            rows.append(_empty_row(base(kind), "skipped"))
    groups = []
    for pair in (("alamouti_dt", "alamouti_mc"), ("fstd_dt", "fstd_mc")):
        both = [k for k in pair if k in eligible]
        if len(both) == 2:
            groups.append(both)
            eligible = [k for k in eligible if k not in both]
    groups.extend([k] for k in eligible)
    seed_stream = RngStream(settings.seed).child("point", cfg.n_c, cfg.l)
    for group in groups:
        try:
            points = _evaluate(
                group, cfg, settings.samples, seed_stream, settings.allocation_mode
            )
        except Exception as exc:  # per-point failures become rows, not aborts
            status = f"error: {type(exc).__name__}: {exc}"
            rows.extend(_empty_row(base(kind), status) for kind in group)
            continue
        for kind in group:
            bp: BoundPoint = points[kind]
            rows.append(
                {
                    **base(kind),
                    "m_active_opt": bp.m_active_opt,
                    "rate_npcu": repr(bp.rate_npcu),
                    "rate_bpcu": repr(bp.rate_npcu / float(np.log(2.0))),
                    "mc_std_err": repr(bp.mc_std_err),
                    "samples": bp.samples,
                    "status": "ok",
                }
            )
    return rows


def run_sweep(settings: SweepSettings, out_path: str) -> bool:
    """Evaluate every (grid point, bound) pair and write the CSV.

    Returns True iff every row has status "ok".
    """
    for kind in settings.bounds:
        if kind not in KNOWN_BOUNDS:
            raise ConfigError(
                f"unknown bound {kind!r}; known: {', '.join(KNOWN_BOUNDS)}"
            )
    template = ChannelConfig(
        n_c=max(settings.m_t + settings.m_r, settings.n),
        l=1,
        m_t=settings.m_t,
        m_r=settings.m_r,
        rho=settings.rho,
        epsilon=settings.epsilon,
    )
    inner_only = all(k in INNER_BOUNDS for k in settings.bounds)
    grid = enumerate_grid(settings.n, template, inner_only=inner_only)
    tasks = [(settings, cfg, tuple(sorted(settings.bounds))) for cfg in grid]
    if settings.workers > 1:
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            row_lists = list(pool.map(_task, tasks))
    else:
        row_lists = [_task(t) for t in tasks]
    rows = [r for rl in row_lists for r in rl]
    rows.sort(key=lambda r: (r["l"], r["bound"]))
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return all(r["status"] == "ok" for r in rows)


def _load_config_file(path: str) -> dict:
    try:
        if path.endswith(".json"):
            with open(path, "rb") as fh:
                return json.load(fh)
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fblmimo-sweep",
        description="Evaluate finite-blocklength rate bounds over all "
        "(coherence interval, diversity branch) factorizations of n.",
    )
    p.add_argument("--config", help="TOML or JSON config file; flags override it")
    p.add_argument("--n", type=int, help="blocklength (channel uses)")
    p.add_argument("--mt", type=int, help="transmit antennas")
    p.add_argument("--mr", type=int, help="receive antennas")
    p.add_argument("--snr-db", type=float, help="SNR in dB")
    p.add_argument("--eps", type=float, help="target packet error probability")
    p.add_argument("--samples", type=int, help="Monte Carlo samples per point")
    p.add_argument("--seed", type=int, help="master random seed")
    p.add_argument("--bounds", help="comma list: " + ",".join(KNOWN_BOUNDS))
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--allocation-mode", choices=["shared", "exhaustive"])
    p.add_argument(
        "--full-converse",
        action="store_true",
        default=None,
        help="also evaluate the unrelaxed converse (small n only)",
    )
    p.add_argument("--workers", type=int, help="parallel worker processes")
    return p


_DEFAULTS = {
    "mt": 2,
    "mr": 2,
    "snr_db": 6.0,
    "samples": None,
    "seed": 0,
    "bounds": "dt,mc",
    "allocation_mode": "shared",
    "full_converse": False,
    "workers": 1,
    "out": "sweep.csv",
}


def _settings_from(args: argparse.Namespace) -> tuple[SweepSettings, str]:
    merged = dict(_DEFAULTS)
    if args.config:
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - {"n", "eps", *_DEFAULTS}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(file_cfg)
    for key in ("n", "mt", "mr", "snr_db", "eps", "samples", "seed", "bounds",
                "out", "allocation_mode", "full_converse", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    for required in ("n", "eps"):
        if merged.get(required) is None:
            raise ConfigError(f"missing required field: {required}")
    bounds = merged["bounds"]
    if isinstance(bounds, str):
        bounds = tuple(b.strip() for b in bounds.split(",") if b.strip())
    else:
        bounds = tuple(bounds)
    if merged["full_converse"] and "mc_full" not in bounds:
        bounds = bounds + ("mc_full",)
    settings = SweepSettings(
        n=int(merged["n"]),
        m_t=int(merged["mt"]),
        m_r=int(merged["mr"]),
        snr_db=float(merged["snr_db"]),
        epsilon=float(merged["eps"]),
        samples=None if merged["samples"] is None else int(merged["samples"]),
        seed=int(merged["seed"]),
        bounds=bounds,
        allocation_mode=merged["allocation_mode"],
        workers=int(merged["workers"]),
    )
    return settings, merged["out"]


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings, out_path = _settings_from(args)
        all_ok = run_sweep(settings, out_path)
    except (ConfigError, EmptyGrid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out_path}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
