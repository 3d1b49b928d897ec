"""Colour-encoded user behaviour analytics for insider-threat detection."""

from ._core import (
    FEATURE_NAMES,
    ChromabehaveError,
    ConicalModel,
    DetectionModel,
    SaeModel,
    alert_reason,
    attribute,
    colorfulness,
    confidence,
    derived_scenario_days,
    exact_shapley,
    file_path_variance,
    generate_corpus,
    point_biserial,
)

__all__ = [
    "FEATURE_NAMES",
    "ChromabehaveError",
    "ConicalModel",
    "DetectionModel",
    "SaeModel",
    "alert_reason",
    "attribute",
    "colorfulness",
    "confidence",
    "derived_scenario_days",
    "exact_shapley",
    "file_path_variance",
    "generate_corpus",
    "point_biserial",
]
__version__ = "0.1.0"
