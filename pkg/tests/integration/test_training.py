"""End-to-end and distillation training on tiny synthetic systems."""

from pathlib import Path

import numpy as np
import pytest

from spckd.data.dataset import Dataset
from spckd.errors import ConfigError, NumericalError
from spckd.models.config import ApertureMode, ExperimentConfig, Role, TrainConfig
from spckd.training.checkpoint import (
    Checkpoint,
    checkpoint_digest,
    checkpoint_load,
    checkpoint_save,
)
from spckd.training.hooks import EpochContext, HookResult, TrainingHook
from spckd.training.system import build_system
from spckd.training.trainer import train_e2e, train_kd


def with_train(config: ExperimentConfig, **update: object) -> ExperimentConfig:
    """``config`` with a re-validated training section."""
    train = TrainConfig.model_validate({**config.train.model_dump(), **update})
    return config.model_copy(update={"train": train})


def student_config(
    config: ExperimentConfig, teacher_path: Path, gamma: float, iterations: int
) -> ExperimentConfig:
    student = with_train(
        config,
        role=Role.STUDENT_KD,
        teacher_checkpoint=teacher_path,
        epochs=iterations,
        distill={"inv_two_sigma_sq": 0.1},
    )
    sensing = config.sensing.model_copy(update={"gamma": gamma})
    return student.model_copy(update={"id": "student", "sensing": sensing})


@pytest.fixture
def teacher_path(tiny_config: ExperimentConfig, tiny_dataset: Dataset, tmp_path: Path) -> Path:
    """A gamma=0.8 teacher trained for 20 iterations."""
    config = tiny_config.model_copy(
        update={"sensing": tiny_config.sensing.model_copy(update={"gamma": 0.8})}
    )
    path = tmp_path / "teacher.spkd"
    checkpoint_save(train_e2e(config, tiny_dataset), path)
    return path


class TestTrainE2E:
    """Test joint aperture and network training."""

    def test_loss_decreases(self, tiny_config: ExperimentConfig, tiny_dataset: Dataset) -> None:
        """Twenty full-batch iterations lower the training loss."""
        ckpt = train_e2e(tiny_config, tiny_dataset)
        losses = ckpt.history["iterations"]
        assert len(losses) == 20
        assert losses[-1] < losses[0]

    def test_halves_loss_within_budget(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset
    ) -> None:
        """Two hundred iterations cut the training loss at least in half."""
        ckpt = train_e2e(with_train(tiny_config, epochs=200), tiny_dataset)
        losses = ckpt.history["iterations"]
        assert len(losses) == 200
        assert min(losses[-20:]) <= 0.5 * losses[0]

    def test_history_and_best_epoch(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset
    ) -> None:
        """Epoch records carry losses and the best epoch is one of them."""
        ckpt = train_e2e(with_train(tiny_config, epochs=5, val_fraction=0.25), tiny_dataset)
        epochs = ckpt.history["epochs"]
        assert [e["epoch"] for e in epochs] == [1, 2, 3, 4, 5]
        assert {"train_loss", "val_loss", "val_psnr", "best"} <= set(epochs[0])
        best = max(epochs, key=lambda e: e["val_psnr"])
        assert ckpt.epoch == best["epoch"] == ckpt.history["best_epoch"]

    def test_iteration_cap(self, tiny_config: ExperimentConfig, tiny_dataset: Dataset) -> None:
        """max_iterations stops training across epochs."""
        config = with_train(tiny_config, batch_size=4, max_iterations=6)
        assert len(train_e2e(config, tiny_dataset).history["iterations"]) == 6

    def test_deterministic(self, tiny_config: ExperimentConfig, tiny_dataset: Dataset) -> None:
        """Two runs with one seed repeat their loss curves."""
        config = with_train(tiny_config, batch_size=4, epochs=3)
        a = train_e2e(config, tiny_dataset)
        b = train_e2e(config, tiny_dataset)
        np.testing.assert_allclose(a.history["iterations"], b.history["iterations"], atol=1e-7)
        for name, value in a.tensors.items():
            np.testing.assert_allclose(value, b.tensors[name], atol=1e-7, err_msg=name)

    def test_random_ca_keeps_aperture(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset
    ) -> None:
        """The random-ca role trains the network but not the aperture."""
        config = with_train(tiny_config, role=Role.RANDOM_CA, epochs=5)
        _, bank = build_system(config)
        fresh_net, _ = build_system(tiny_config)
        ckpt = train_e2e(config, tiny_dataset)
        np.testing.assert_array_equal(ckpt.tensors["aperture.latent"], bank.latent.data)
        changed = [
            name
            for name, p in fresh_net.named_parameters()
            if not np.array_equal(ckpt.tensors[name], p.data)
        ]
        assert changed

    def test_rejects_student_role(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, tmp_path: Path
    ) -> None:
        """Distillation configs cannot be trained end to end."""
        config = with_train(
            tiny_config, role=Role.STUDENT_KD, teacher_checkpoint=tmp_path / "t.spkd"
        )
        with pytest.raises(ConfigError):
            train_e2e(config, tiny_dataset)

    def test_rejects_empty_dataset(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset
    ) -> None:
        """An empty dataset is a configuration error."""
        with pytest.raises(ConfigError, match="empty"):
            train_e2e(tiny_config, tiny_dataset.take(0))

    def test_hook_abort(self, tiny_config: ExperimentConfig, tiny_dataset: Dataset) -> None:
        """A hook asking to abort stops training with a numerical error."""

        class StopHook(TrainingHook):
            @property
            def name(self) -> str:
                return "stop"

            def after_epoch(self, context: EpochContext) -> HookResult:
                return HookResult(success=False, abort=context.epoch == 2, message="halt")

        with pytest.raises(NumericalError, match="halt"):
            train_e2e(tiny_config, tiny_dataset, hooks=[StopHook()])


class TestTrainKD:
    """Test distillation from a frozen teacher."""

    def test_loss_decreases(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """Twenty KD iterations for a gamma=0.2 student lower kd_loss."""
        config = student_config(tiny_config, teacher_path, 0.2, 20)
        ckpt = train_kd(config, tiny_dataset, checkpoint_load(teacher_path))
        losses = ckpt.history["iterations"]
        assert losses[-1] < losses[0]
        assert ckpt.history["teacher_gamma"] == 0.8

    def test_halves_loss_within_budget(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """Two hundred KD iterations cut kd_loss at least in half."""
        config = student_config(tiny_config, teacher_path, 0.2, 200)
        losses = train_kd(config, tiny_dataset, checkpoint_load(teacher_path)).history[
            "iterations"
        ]
        assert min(losses[-20:]) <= 0.5 * losses[0]

    def test_teacher_file_unchanged(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """The teacher checkpoint is byte-identical after distillation."""
        before = checkpoint_digest(teacher_path)
        teacher = checkpoint_load(teacher_path)
        stored = {name: value.copy() for name, value in teacher.tensors.items()}
        train_kd(student_config(tiny_config, teacher_path, 0.2, 5), tiny_dataset, teacher)
        assert checkpoint_digest(teacher_path) == before
        for name, value in teacher.tensors.items():
            np.testing.assert_array_equal(value, stored[name], err_msg=name)

    def test_self_distillation_stays_zero(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, tmp_path: Path
    ) -> None:
        """A student identical to its teacher starts and stays at zero loss."""
        net, bank = build_system(tiny_config)
        path = tmp_path / "self.spkd"
        checkpoint_save(Checkpoint.from_system(tiny_config, net, bank), path)
        config = student_config(tiny_config, path, tiny_config.sensing.gamma, 5)
        losses = train_kd(config, tiny_dataset, checkpoint_load(path)).history["iterations"]
        assert max(losses) <= 1e-6

    def test_stage_mismatch(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """Correlation congruence needs equal stage counts."""
        config = student_config(tiny_config, teacher_path, 0.2, 5).model_copy(
            update={"stages": 3}
        )
        with pytest.raises(ConfigError, match="stages"):
            train_kd(config, tiny_dataset, checkpoint_load(teacher_path))

    def test_real_student_rejected(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """Students must use binary apertures."""
        config = student_config(tiny_config, teacher_path, 0.2, 5)
        sensing = config.sensing.model_copy(update={"mode": ApertureMode.REAL})
        config = config.model_copy(update={"sensing": sensing})
        with pytest.raises(ConfigError, match="binary"):
            train_kd(config, tiny_dataset, checkpoint_load(teacher_path))

    def test_wrong_role(
        self, tiny_config: ExperimentConfig, tiny_dataset: Dataset, teacher_path: Path
    ) -> None:
        """train_kd only trains students."""
        with pytest.raises(ConfigError, match="student-kd"):
            train_kd(tiny_config, tiny_dataset, checkpoint_load(teacher_path))
