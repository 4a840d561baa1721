"""Finite-difference checks of every parameter class on a tiny system."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import structlog

from spckd.data.synthetic import synth_dataset
from spckd.distill.losses import kd_loss
from spckd.models.config import ApertureMode, DistillConfig, FeatureKind, ProxConfig
from spckd.numerics.gradcheck import GradCheckReport, analytic_gradients, finite_diff_report
from spckd.numerics.tensor import Parameter, Tensor, no_grad
from spckd.recovery.network import RecoveryNet, unrolled_forward
from spckd.sensing.aperture import CodedApertureBank, build_sensing
from spckd.sensing.operators import spc_forward
from spckd.training.trainer import mse_loss

logger = structlog.get_logger(__name__)

TOLERANCE = 1e-4


@dataclass(frozen=True)
class TinySystem:
    """Geometry of the gradient-check system."""

    height: int = 8
    width: int = 8
    stages: int = 2
    channels: int = 4
    gamma: float = 0.5
    teacher_gamma: float = 0.75
    samples: int = 2
    seed: int = 0
    max_entries: int = 8

    @property
    def prox(self) -> ProxConfig:
        return ProxConfig(channels=self.channels)


def _bank(tiny: TinySystem, gamma: float, mode: ApertureMode, seed: int) -> CodedApertureBank:
    return build_sensing(gamma, tiny.height, tiny.width, mode=mode, seed=seed, dtype="f64")


def _net(tiny: TinySystem, bank: CodedApertureBank, seed: int) -> RecoveryNet:
    return RecoveryNet(bank.shape, tiny.stages, tiny.prox, seed=seed, dtype="f64")


def _e2e_loss(net: RecoveryNet, bank: CodedApertureBank, x: Tensor) -> Callable[[], Tensor]:
    def forward() -> Tensor:
        y = spc_forward(bank, x)
        return mse_loss(unrolled_forward(net, bank, y).reconstruction, x)

    return forward


def _ste_report(
    tiny: TinySystem,
    make_loss: Callable[[RecoveryNet, CodedApertureBank], Callable[[], Tensor]],
    net: RecoveryNet,
    bank: CodedApertureBank,
) -> GradCheckReport:
    """Binary latent gradients against finite differences of the realized matrix.

    The straight-through backward hands dL/dH to the latent unchanged, so the
    reference is a real-valued bank whose latent equals sign(latent).
    """
    analytic = analytic_gradients(make_loss(net, bank), [bank.latent])
    signs = np.where(bank.latent.data >= 0, 1.0, -1.0)
    latent = Parameter(signs, name="aperture.latent", dtype="f64")
    real = CodedApertureBank(latent, ApertureMode.REAL, bank.shape, seed=tiny.seed)
    return finite_diff_report(
        make_loss(net, real), [real.latent], analytic=analytic, max_entries=tiny.max_entries * 4
    )


def run_gradcheck_suite(tiny: TinySystem | None = None) -> dict[str, GradCheckReport]:
    """Check E2E and KD losses in both aperture modes; keys name the case."""
    tiny = tiny or TinySystem()
    data = synth_dataset(tiny.seed, tiny.samples, tiny.height, tiny.width)
    x = Tensor(data.vectors.astype(np.float64))
    reports: dict[str, GradCheckReport] = {}

    # E2E, real-valued aperture: every parameter including the latent
    bank = _bank(tiny, tiny.gamma, ApertureMode.REAL, tiny.seed)
    net = _net(tiny, bank, tiny.seed + 1)
    reports["e2e-real"] = finite_diff_report(
        _e2e_loss(net, bank, x), [*net.parameters(), bank.latent], max_entries=tiny.max_entries
    )

    # E2E, binary aperture: network parameters by finite differences, latent via STE
    bank = _bank(tiny, tiny.gamma, ApertureMode.BINARY, tiny.seed)
    net = _net(tiny, bank, tiny.seed + 1)
    reports["e2e-binary"] = finite_diff_report(
        _e2e_loss(net, bank, x), net.parameters(), max_entries=tiny.max_entries
    )
    reports["e2e-binary-ste"] = _ste_report(tiny, lambda n, b: _e2e_loss(n, b, x), net, bank)

    # KD: frozen teacher trace, student in both modes
    teacher_bank = _bank(tiny, tiny.teacher_gamma, ApertureMode.BINARY, tiny.seed + 10)
    teacher_net = _net(tiny, teacher_bank, tiny.seed + 11)
    with no_grad():
        y_t = spc_forward(teacher_bank, x)
        trace_t = unrolled_forward(teacher_net, teacher_bank, y_t)
    distill = DistillConfig(inv_two_sigma_sq=0.1, feature_kind=FeatureKind.SPARSE)

    def kd_forward(student: RecoveryNet, student_bank: CodedApertureBank) -> Callable[[], Tensor]:
        def forward() -> Tensor:
            y = spc_forward(student_bank, x)
            return kd_loss(unrolled_forward(student, student_bank, y), trace_t, distill)

        return forward

    bank = _bank(tiny, tiny.gamma, ApertureMode.REAL, tiny.seed)
    net = _net(tiny, bank, tiny.seed + 1)
    reports["kd-real"] = finite_diff_report(
        kd_forward(net, bank), [*net.parameters(), bank.latent], max_entries=tiny.max_entries
    )
    bank = _bank(tiny, tiny.gamma, ApertureMode.BINARY, tiny.seed)
    net = _net(tiny, bank, tiny.seed + 1)
    reports["kd-binary"] = finite_diff_report(
        kd_forward(net, bank), net.parameters(), max_entries=tiny.max_entries
    )
    reports["kd-binary-ste"] = _ste_report(tiny, kd_forward, net, bank)

    for case, report in reports.items():
        logger.info(
            "gradcheck_case",
            case=case,
            max_rel_error=report.max_rel_error,
            checked=report.checked,
            kinks=report.kinks,
            worst_parameter=report.worst_parameter,
        )
    return reports


def suite_passed(reports: dict[str, GradCheckReport], tolerance: float = TOLERANCE) -> bool:
    return all(r.passed(tolerance) and r.checked > 0 for r in reports.values())
