"""Food-inspection risk modeling: scoring, schedule simulation and audits."""

from ._canvass import (
    FEATURE_NAMES,
    DataError,
    NumericError,
    UsageError,
    cluster_1d,
    fit_logistic,
    fractional_years,
    generate_city,
    ground_distance_meters,
    kde_intensity,
    odds_ratio,
    predict_probability,
    severity_of,
    simulate_schedule,
    target_label,
)

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "DataError",
    "NumericError",
    "UsageError",
    "cluster_1d",
    "fit_logistic",
    "fractional_years",
    "generate_city",
    "ground_distance_meters",
    "kde_intensity",
    "odds_ratio",
    "predict_probability",
    "severity_of",
    "simulate_schedule",
    "target_label",
]
