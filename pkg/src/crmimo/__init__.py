"""QoS-aware user selection and power allocation for an underlay massive-MIMO
small cell sharing spectrum with licensed transmitter/receiver pairs."""

from .allocation import AllocationOutcome, budget, equivalent_gain, qos_power, waterfill
from .analysis import (
    MODE_NOUPDATE,
    MODE_UPDATE,
    SelectionChainAnalysis,
    corollary1_sum_params,
    dominance_cdf_gap,
    expected_interference,
    expected_satisfied,
    expected_selected,
    gil_pelaez_cdf,
    prob_drop,
    prob_feasible,
    rate_ccdf,
    theorem1_params,
)
from .beamform import BeamSet, effective_gain, effective_gains, zf_vectors
from .channel import (
    ChannelRealization,
    CsiView,
    corrupt_csi,
    geometry_rng,
    reverse_interference,
    sample_channels,
    sample_geometry,
    trial_rng,
)
from .config import (
    Geometry,
    NetworkConfig,
    dbm_to_watts,
    default_margins,
    load_config,
    validate,
    watts_to_dbm,
)
from .errors import (
    ConfigError,
    GuardError,
    NumericError,
    RankDeficientError,
    ZeroGainError,
)
from .selection import (
    PerformanceReport,
    SelectionOutcome,
    dmp,
    evaluate,
    exhaustive_optimal,
    mdml,
    sorted_prefix_optimal,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationOutcome",
    "BeamSet",
    "ChannelRealization",
    "ConfigError",
    "CsiView",
    "Geometry",
    "GuardError",
    "MODE_NOUPDATE",
    "MODE_UPDATE",
    "NetworkConfig",
    "NumericError",
    "PerformanceReport",
    "RankDeficientError",
    "SelectionChainAnalysis",
    "SelectionOutcome",
    "ZeroGainError",
    "budget",
    "corollary1_sum_params",
    "corrupt_csi",
    "dbm_to_watts",
    "default_margins",
    "dmp",
    "dominance_cdf_gap",
    "effective_gain",
    "effective_gains",
    "equivalent_gain",
    "evaluate",
    "exhaustive_optimal",
    "expected_interference",
    "expected_satisfied",
    "expected_selected",
    "geometry_rng",
    "gil_pelaez_cdf",
    "load_config",
    "mdml",
    "prob_drop",
    "prob_feasible",
    "qos_power",
    "rate_ccdf",
    "reverse_interference",
    "sample_channels",
    "sample_geometry",
    "sorted_prefix_optimal",
    "theorem1_params",
    "trial_rng",
    "validate",
    "waterfill",
    "watts_to_dbm",
    "zf_vectors",
]
