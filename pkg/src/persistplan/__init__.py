"""Monte Carlo planning of feature counts versus temporal persistence.

Synthetic two-session Gaussian features are generated at a target ICC,
scored with a cosine matcher, and searched for the number of random
features that reaches an EER or FRR-at-FAR target.  Log-linear fits of
``log10(N)`` against ICC turn the results into planning equations.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    NotReachableError,
    PersistPlanError,
    ResolutionError,
)
from .featuregen import BandConfig, FeatureDataset, IccTarget, generate_band, generate_bands, noise_sd
from .metrics import EerEstimate, ErrorRatePoint, compute_eer, frr_at_far, roc_curve
from .regression import RegressionFit, fit_all_targets, fit_log_linear, predict_feature_count
from .reliability import BandIccSummary, band_icc_summary, icc_two_session
from .scoring import ImpostorPolicy, ScoreSet, score_dataset, similarity, whiten, zscore_params
from .search import (
    RequiredFeatures,
    SearchStage,
    TargetSpec,
    find_required_features,
    mean_metric,
    required_features_table,
)

__all__ = [
    "BandConfig", "BandIccSummary", "ConfigError", "DegenerateInputError", "DomainError",
    "EerEstimate", "ErrorRatePoint", "FeatureDataset", "IccTarget", "ImpostorPolicy",
    "NotReachableError", "PersistPlanError", "RegressionFit", "RequiredFeatures",
    "ResolutionError", "ScoreSet", "SearchStage", "TargetSpec", "band_icc_summary",
    "compute_eer", "find_required_features", "fit_all_targets", "fit_log_linear", "frr_at_far",
    "generate_band", "generate_bands", "icc_two_session", "mean_metric", "noise_sd",
    "predict_feature_count", "required_features_table", "roc_curve", "score_dataset",
    "similarity", "whiten", "zscore_params",
]
