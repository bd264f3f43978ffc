"""cusumkit: exact moments, bounds, thresholds and detection for the
CUSUM (Lindley) process W_{n+1} = max(W_n + Y_{n+1}, 0)."""

from .models import (
    BernoulliPM,
    DiscreteTable,
    IncrementModel,
    NormalLLR,
    RateFunction,
    ShiftedNormal,
    parse_model,
)
from .moments import (
    MgfSeries,
    MomentTable,
    asymptote_slope,
    cusum_mean,
    cusum_mgf_matrix,
    cusum_mgf_partitions,
    cusum_mgf_recursive,
    cusum_variance,
    moment_table,
    rescaled_bell,
)
from .bounds import (
    Regime,
    ThresholdReport,
    exp_moment_upper,
    max_tail_lower,
    max_tail_upper,
    queue_tail_bound,
    regime,
    stopped_tail_bound,
    threshold_lb,
    threshold_report,
    threshold_ub,
)
from .simulate import (
    ExactDistribution,
    SimConfig,
    exact_enumerate,
    mc_quantile_max,
    mc_tail_max,
    simulate_cusum,
    stopping_stats,
)
from .detect import (
    CusumState,
    DetectionReport,
    DiscretePair,
    NormalPair,
    llr_increments,
    monitor_step,
    scan_offline,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliPM",
    "CusumState",
    "DetectionReport",
    "DiscretePair",
    "DiscreteTable",
    "ExactDistribution",
    "IncrementModel",
    "MgfSeries",
    "MomentTable",
    "NormalLLR",
    "NormalPair",
    "RateFunction",
    "Regime",
    "ShiftedNormal",
    "SimConfig",
    "ThresholdReport",
    "asymptote_slope",
    "cusum_mean",
    "cusum_mgf_matrix",
    "cusum_mgf_partitions",
    "cusum_mgf_recursive",
    "cusum_variance",
    "exact_enumerate",
    "exp_moment_upper",
    "llr_increments",
    "max_tail_lower",
    "max_tail_upper",
    "mc_quantile_max",
    "mc_tail_max",
    "moment_table",
    "monitor_step",
    "parse_model",
    "queue_tail_bound",
    "regime",
    "rescaled_bell",
    "scan_offline",
    "simulate_cusum",
    "stopped_tail_bound",
    "stopping_stats",
    "threshold_lb",
    "threshold_report",
    "threshold_ub",
]
