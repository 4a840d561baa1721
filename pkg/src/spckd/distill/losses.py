"""Distillation losses over per-stage features of the unrolled network."""

from dataclasses import dataclass

import structlog

from spckd.errors import ConfigError, ShapeError
from spckd.models.config import DistillConfig, FeatureKind
from spckd.numerics import ops
from spckd.numerics.tensor import Tensor
from spckd.recovery.network import ReconstructionTrace

logger = structlog.get_logger(__name__)


@dataclass
class FeatureMatrix:
    """Stage features of a batch: ``rows`` has shape (B, L, D)."""

    rows: Tensor
    kind: FeatureKind

    @property
    def stages(self) -> int:
        return self.rows.shape[-2]

    def detach(self) -> "FeatureMatrix":
        return FeatureMatrix(self.rows.detach(), self.kind)


def extract_features(trace: ReconstructionTrace, kind: FeatureKind) -> FeatureMatrix:
    """Stack f^1..f^L (sparse) or x^1..x^L (non-sparse) as matrix rows."""
    source = trace.sparse_codes if kind == FeatureKind.SPARSE else trace.x_stages
    return FeatureMatrix(ops.stack(source, axis=1), kind)


def rbf_correlation(features: FeatureMatrix, inv_two_sigma_sq: float) -> Tensor:
    """Gaussian RBF kernel between stage features: exp(-c * ||f^i - f^j||^2).

    Returns a (B, L, L) tensor, symmetric with unit diagonal.
    """
    if inv_two_sigma_sq <= 0:
        raise ConfigError(f"Kernel coefficient must be positive, got {inv_two_sigma_sq}")
    distances = ops.pairwise_sq_distances(features.rows)
    return ops.exp(ops.mul_const(distances, -inv_two_sigma_sq))


def cc_loss(teacher: FeatureMatrix, student: FeatureMatrix, config: DistillConfig) -> Tensor:
    """Frobenius distance between teacher and student correlation matrices.

    Computed per sample and averaged over the batch. The teacher side is a
    constant.
    """
    if teacher.stages != student.stages:
        raise ShapeError(
            f"Teacher has {teacher.stages} stages, student has {student.stages}; "
            "correlation congruence needs equal L"
        )
    if teacher.rows.shape[0] != student.rows.shape[0]:
        raise ShapeError(
            f"Batch mismatch: teacher {teacher.rows.shape[0]}, student {student.rows.shape[0]}"
        )
    eta_t = rbf_correlation(teacher.detach(), config.inv_two_sigma_sq)
    eta_s = rbf_correlation(student, config.inv_two_sigma_sq)
    per_sample = ops.sqrt(ops.sum(ops.square(eta_t - eta_s), axis=(1, 2)))
    return ops.mean(per_sample)


def imitation_loss(x_s: Tensor, x_t: Tensor) -> Tensor:
    """Squared Euclidean distance to the (constant) teacher reconstruction.

    Batched inputs (B, D) give the batch mean of the per-sample distances.
    """
    if x_s.shape != x_t.shape:
        raise ShapeError(f"Reconstruction shapes differ: {x_s.shape} vs {x_t.shape}")
    diff = ops.square(x_s - x_t.detach())
    if diff.data.ndim == 1:
        return ops.sum(diff)
    return ops.mean(ops.sum(diff, axis=tuple(range(1, diff.data.ndim))))


def kd_loss(
    trace_s: ReconstructionTrace,
    trace_t: ReconstructionTrace,
    config: DistillConfig,
) -> Tensor:
    """cc_weight·CC + im_weight·IM, averaged over the batch."""
    features_s = extract_features(trace_s, config.feature_kind)
    features_t = extract_features(trace_t, config.feature_kind)
    cc = cc_loss(features_t, features_s, config)
    im = imitation_loss(trace_s.reconstruction, trace_t.reconstruction)
    return ops.mul_const(cc, config.cc_weight) + ops.mul_const(im, config.im_weight)
