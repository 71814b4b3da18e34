"""Familywise error of multiple-testing procedures under equicorrelated normals."""

from ._core import (
    DomainError,
    ModelError,
    UsageError,
    class_bound,
    critical_values,
    estimate,
    hommel,
    limiting_bh_fdr,
    normal_cdf,
    normal_quantile,
    normal_sf,
    reference_limit,
    reject,
    s_objective,
    step_down,
    step_up,
    validate_cutoffs,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "ModelError",
    "UsageError",
    "class_bound",
    "critical_values",
    "estimate",
    "hommel",
    "limiting_bh_fdr",
    "normal_cdf",
    "normal_quantile",
    "normal_sf",
    "reference_limit",
    "reject",
    "s_objective",
    "step_down",
    "step_up",
    "validate_cutoffs",
]
