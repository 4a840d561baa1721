"""End-to-end and distillation training loops."""

import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.data.dataset import Dataset
from spckd.distill.losses import kd_loss
from spckd.errors import ConfigError, NumericalError
from spckd.eval.runner import evaluate
from spckd.models.config import ApertureMode, ExperimentConfig, Role
from spckd.numerics import ops
from spckd.numerics.tensor import Tape, Tensor, no_grad
from spckd.recovery.network import RecoveryNet, ReconstructionTrace, unrolled_forward
from spckd.sensing.aperture import CodedApertureBank
from spckd.sensing.operators import spc_forward
from spckd.training.checkpoint import Checkpoint
from spckd.training.hooks import EpochContext, TrainingHook, default_hooks
from spckd.training.optimizers import OptimizerFactory, optimizer_step
from spckd.training.system import build_system

logger = structlog.get_logger(__name__)

E2E_ROLES = {Role.TEACHER, Role.BASELINE, Role.RANDOM_CA}

# (x batch, noise rng) -> scalar loss, evaluated inside an active tape
LossFn = Callable[[Tensor, np.random.Generator], Tensor]


def mse_loss(estimate: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over every entry of the batch."""
    return ops.mean(ops.square(estimate - target))


def system_trace(
    net: RecoveryNet,
    bank: CodedApertureBank,
    x: Tensor,
    config: ExperimentConfig,
    rng: np.random.Generator,
) -> ReconstructionTrace:
    """Sense ``x`` with the realized aperture and unroll the network."""
    h = bank.realize()
    y = spc_forward(bank, x, noise=config.sensing.noise, rng=rng, matrix=h)
    return unrolled_forward(net, bank, y, matrix=h)


class Trainer:
    """Mini-batch optimization of one (network, aperture) system.

    Owns the optimizer, the shuffling and noise generators and the metric
    history; ``run`` returns the best-validation checkpoint.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        net: RecoveryNet,
        bank: CodedApertureBank,
        loss_fn: LossFn,
        hooks: Sequence[TrainingHook] | None = None,
    ) -> None:
        self.config = config
        self.net = net
        self.bank = bank
        self.loss_fn = loss_fn
        self.hooks = sorted(hooks) if hooks is not None else default_hooks()
        self.optimizer = OptimizerFactory.create(
            config.train.optimizer, [*net.parameters(), *bank.parameters()]
        )
        self.iteration_losses: list[float] = []
        self.epochs: list[dict[str, Any]] = []

    @property
    def history(self) -> dict[str, Any]:
        return {"iterations": list(self.iteration_losses), "epochs": list(self.epochs)}

    def _step(self, x: NDArray[Any], noise_rng: np.random.Generator) -> float:
        batch = Tensor(x.astype(self.bank.latent.dtype))
        with Tape() as tape:
            loss = self.loss_fn(batch, noise_rng)
        tape.backward(loss)
        optimizer_step(self.optimizer)
        return loss.item()

    def _validate(self, val: Dataset) -> dict[str, float]:
        result = evaluate(
            self.net,
            self.bank,
            val,
            batch_size=self.config.train.batch_size,
            noise=self.config.sensing.noise,
            noise_seed=self.config.noise_seed,
            compute_ssim=False,
        )
        return {"val_loss": result.mse, "val_psnr": result.psnr_db}

    def run(self, train: Dataset, val: Dataset | None = None) -> Checkpoint:
        """Train for the configured epochs or iteration cap.

        Raises:
            ConfigError: Empty training set
            NumericalError: A hook aborted on a non-finite metric
        """
        if len(train) == 0:
            raise ConfigError("Training dataset is empty")
        tc = self.config.train
        shuffle_rng = np.random.default_rng(self.config.shuffle_seed)
        noise_rng = np.random.default_rng(self.config.noise_seed)
        run_id = self.config.id
        best: Checkpoint | None = None
        best_score = -math.inf
        iteration = 0
        vectors = train.vectors

        logger.info(
            "training_started",
            run_id=run_id,
            role=tc.role.value,
            gamma=self.bank.shape.gamma,
            snapshots=self.bank.shape.snapshots,
            stages=self.net.num_stages,
            channels=self.net.prox.channels,
            parameters=sum(p.size for p in self.optimizer.params),
            train_count=len(train),
            val_count=len(val) if val is not None else 0,
        )
        for epoch in range(1, tc.epochs + 1):
            if tc.max_iterations is not None and iteration >= tc.max_iterations:
                break
            context = EpochContext(run_id, tc.role.value, epoch, iteration)
            for hook in self.hooks:
                hook.before_epoch(context)

            losses = []
            order = shuffle_rng.permutation(len(train))
            for indices in train.batches(tc.batch_size, order):
                if tc.max_iterations is not None and iteration >= tc.max_iterations:
                    break
                losses.append(self._step(vectors[indices], noise_rng))
                iteration += 1
            self.iteration_losses.extend(losses)

            metrics = {"train_loss": float(np.mean(losses))}
            if val is not None and len(val):
                metrics.update(self._validate(val))
            score = metrics.get("val_psnr", -metrics["train_loss"])
            improved = score > best_score
            if improved:
                best_score = score
                best = Checkpoint.from_system(self.config, self.net, self.bank, epoch)
            record = {"epoch": epoch, "iteration": iteration, "best": improved, **metrics}
            self.epochs.append(record)

            context = EpochContext(run_id, tc.role.value, epoch, iteration, metrics)
            for hook in self.hooks:
                result = hook.after_epoch(context)
                if result.abort:
                    raise NumericalError(f"Training aborted by {hook.name}: {result.message}")

        assert best is not None
        best.history = {**self.history, "best_epoch": best.epoch}
        logger.info(
            "training_completed",
            run_id=run_id,
            iterations=iteration,
            best_epoch=best.epoch,
            best_score=best_score,
        )
        return best


def _split_validation(
    config: ExperimentConfig, train: Dataset, val: Dataset | None
) -> tuple[Dataset, Dataset | None]:
    if val is not None or config.train.val_fraction == 0:
        return train, val
    return train.split_off(config.train.val_fraction, config.shuffle_seed)


def train_e2e(
    config: ExperimentConfig,
    dataset: Dataset,
    val: Dataset | None = None,
    hooks: Sequence[TrainingHook] | None = None,
) -> Checkpoint:
    """Jointly learn the aperture and the network against the MSE task loss.

    Raises:
        ConfigError: Wrong role or empty dataset
    """
    if config.train.role not in E2E_ROLES:
        raise ConfigError(f"train_e2e does not train role {config.train.role.value}")
    if len(dataset) == 0:
        raise ConfigError("Training dataset is empty")
    net, bank = build_system(config)

    def loss_fn(x: Tensor, rng: np.random.Generator) -> Tensor:
        trace = system_trace(net, bank, x, config, rng)
        return mse_loss(trace.reconstruction, x)

    train, held_out = _split_validation(config, dataset, val)
    return Trainer(config, net, bank, loss_fn, hooks).run(train, held_out)


def train_kd(
    config: ExperimentConfig,
    dataset: Dataset,
    teacher: Checkpoint,
    val: Dataset | None = None,
    hooks: Sequence[TrainingHook] | None = None,
) -> Checkpoint:
    """Train a binary student against the frozen teacher with kd_loss only.

    Raises:
        ConfigError: Wrong role, non-binary student, stage-count or scene
            geometry mismatch with the teacher, or empty dataset
    """
    tc = config.train
    if tc.role != Role.STUDENT_KD or tc.distill is None:
        raise ConfigError(f"train_kd needs role student-kd, got {tc.role.value}")
    if config.sensing.mode != ApertureMode.BINARY:
        raise ConfigError("Distilled students must use binary apertures")
    if teacher.config.stages != config.stages:
        raise ConfigError(
            f"Teacher has {teacher.config.stages} stages, student {config.stages}; "
            "correlation congruence needs equal L"
        )
    ts, ss = teacher.config.sensing, config.sensing
    if (ts.height, ts.width, ts.bands) != (ss.height, ss.width, ss.bands):
        raise ConfigError(
            f"Teacher scenes {ts.height}x{ts.width}x{ts.bands} differ from "
            f"student scenes {ss.height}x{ss.width}x{ss.bands}"
        )
    if len(dataset) == 0:
        raise ConfigError("Training dataset is empty")

    teacher_net, teacher_bank = teacher.build_system()
    teacher_net.freeze()
    teacher_bank.latent.requires_grad = False
    net, bank = build_system(config)
    distill = tc.distill

    def loss_fn(x: Tensor, rng: np.random.Generator) -> Tensor:
        with no_grad():
            trace_t = system_trace(teacher_net, teacher_bank, x, teacher.config, rng)
        trace_s = system_trace(net, bank, x, config, rng)
        return kd_loss(trace_s, trace_t, distill)

    logger.info(
        "teacher_loaded",
        gamma_t=teacher_bank.shape.gamma,
        gamma_s=bank.shape.gamma,
        feature_kind=distill.feature_kind.value,
    )
    train, held_out = _split_validation(config, dataset, val)
    student = Trainer(config, net, bank, loss_fn, hooks).run(train, held_out)
    student.history["teacher_gamma"] = ts.gamma
    return student
