"""MOSUM segmentation of regime-switching multivariate processes."""

from .detector import (
    LimitLawQuantiles,
    SegmentationResult,
    confidence_interval,
    segment,
    significant_local_extrema,
    simulate_argmax_limit,
)
from .estimator import MosumSegmenter
from .experiments import ExperimentReport, classify_estimates, emit_figure_series, run_table1
from .model import (
    ChangeSpec,
    EventSeries,
    SampledPath,
    ScaleMode,
    SegmentationConfig,
    ThresholdMode,
    counting_path,
    validate_config,
)
from .mosum import MosumSeries, mosum_statistic, quadratic_form_series, signal_term
from .scale import (
    ScaleProvider,
    build_scale_provider,
    local_renewal_variance,
    renewal_asymptotic_covariance,
)
from .simulate import (
    RenewalScenario,
    noiseless_path,
    scenario_preset,
    simulate_partial_sum_regimes,
    simulate_renewal_regimes,
    simulate_wiener_drift,
)
from .threshold import (
    ThresholdResult,
    gumbel_constants,
    gumbel_quantile,
    threshold_linear_mc,
    threshold_sublinear,
)

__version__ = "0.1.0"

__all__ = [
    "ChangeSpec",
    "EventSeries",
    "ExperimentReport",
    "LimitLawQuantiles",
    "MosumSegmenter",
    "MosumSeries",
    "RenewalScenario",
    "SampledPath",
    "ScaleMode",
    "ScaleProvider",
    "SegmentationConfig",
    "SegmentationResult",
    "ThresholdMode",
    "ThresholdResult",
    "build_scale_provider",
    "classify_estimates",
    "confidence_interval",
    "counting_path",
    "emit_figure_series",
    "gumbel_constants",
    "gumbel_quantile",
    "local_renewal_variance",
    "mosum_statistic",
    "noiseless_path",
    "quadratic_form_series",
    "renewal_asymptotic_covariance",
    "run_table1",
    "scenario_preset",
    "segment",
    "signal_term",
    "significant_local_extrema",
    "simulate_argmax_limit",
    "simulate_partial_sum_regimes",
    "simulate_renewal_regimes",
    "simulate_wiener_drift",
    "threshold_linear_mc",
    "threshold_sublinear",
    "validate_config",
]
