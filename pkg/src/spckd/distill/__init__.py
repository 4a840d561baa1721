"""Knowledge-distillation losses."""

from spckd.distill.losses import (
    FeatureMatrix,
    cc_loss,
    extract_features,
    imitation_loss,
    kd_loss,
    rbf_correlation,
)

__all__ = [
    "FeatureMatrix",
    "cc_loss",
    "extract_features",
    "imitation_loss",
    "kd_loss",
    "rbf_correlation",
]
