"""Lloyd-type clustering for sub-Gaussian mixtures, stochastic block models
and Dawid-Skene crowdsourcing, with seeded samplers and a benchmark CLI."""

from lloydkit.community import CommuConfig, fit_commu_lloyd, trim_adjacency
from lloydkit.crowd import CrowdConfig, fit_crowd_lloyd, majority_vote, v_pi
from lloydkit.lloyd import (
    FitResult,
    LloydConfig,
    fit_lloyd,
    fit_symmetric_two,
    random_init_search,
)
from lloydkit.metrics import (
    ClusterMetrics,
    SnrReport,
    center_error,
    groupwise_rate,
    kmeans_objective,
    misclustering_rate,
    misclustering_rate_bijective,
    snr_report,
)
from lloydkit.spectral import approx_kmeans, spectral_cluster, truncated_svd

__version__ = "0.1.0"

__all__ = [
    "ClusterMetrics",
    "CommuConfig",
    "CrowdConfig",
    "FitResult",
    "LloydConfig",
    "SnrReport",
    "approx_kmeans",
    "center_error",
    "fit_commu_lloyd",
    "fit_crowd_lloyd",
    "fit_lloyd",
    "fit_symmetric_two",
    "groupwise_rate",
    "kmeans_objective",
    "majority_vote",
    "misclustering_rate",
    "misclustering_rate_bijective",
    "random_init_search",
    "snr_report",
    "spectral_cluster",
    "trim_adjacency",
    "truncated_svd",
    "v_pi",
]
