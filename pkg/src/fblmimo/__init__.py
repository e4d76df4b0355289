"""Finite-blocklength rate bounds for MIMO Rayleigh block-fading channels
without channel state information.

The package evaluates Monte Carlo achievability and converse bounds on the
maximum coding rate at a target packet error probability, together with the
matching infinite-blocklength baselines, for unitary space-time inputs and
for two- and four-antenna orthogonal inner codes.
"""

from .alamouti import (
    UnvalidatedDensity,
    alamouti_dt_rate,
    alamouti_log_pdf,
    alamouti_mc_rate,
    alamouti_rates,
    alamouti_sample_S,
    alamouti_shuffle,
    fstd_rates,
)
from .asymptotics import (
    ergodic_capacity_lb,
    high_snr_prelog,
    m_star,
    outage_capacity,
    outage_prob,
)
from .converse import (
    PowerAllocation,
    mc_full_rate,
    mc_relaxed_rate,
    sample_Sbar_block,
    sample_T_block,
    telatar_sigma,
)
from .dt import BoundPoint, dt_error_prob, dt_rate, sample_S_block
from .randmat import DegenerateSpectrum, RngStream
from .search import EmptyFeasible, InsufficientSamples, TailUnderflow
from .special import SignedLogReal
from .ustm import (
    ArgumentError,
    ChannelConfig,
    NegativeDensity,
    UstmParams,
    log_conditional_pdf,
    log_output_pdf,
    log_psi,
)

__all__ = [
    "ArgumentError",
    "BoundPoint",
    "ChannelConfig",
    "DegenerateSpectrum",
    "EmptyFeasible",
    "InsufficientSamples",
    "NegativeDensity",
    "PowerAllocation",
    "RngStream",
    "SignedLogReal",
    "TailUnderflow",
    "UnvalidatedDensity",
    "UstmParams",
    "alamouti_dt_rate",
    "alamouti_log_pdf",
    "alamouti_mc_rate",
    "alamouti_rates",
    "alamouti_sample_S",
    "alamouti_shuffle",
    "dt_error_prob",
    "dt_rate",
    "ergodic_capacity_lb",
    "fstd_rates",
    "high_snr_prelog",
    "log_conditional_pdf",
    "log_output_pdf",
    "log_psi",
    "m_star",
    "mc_full_rate",
    "mc_relaxed_rate",
    "outage_capacity",
    "outage_prob",
    "sample_S_block",
    "sample_Sbar_block",
    "sample_T_block",
    "telatar_sigma",
]

__version__ = "0.1.0"
