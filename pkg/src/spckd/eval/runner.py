"""Test-set evaluation of a trained system."""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import structlog
from numpy.typing import NDArray

from spckd.config.settings import get_settings
from spckd.data.dataset import Dataset, unflatten_scene
from spckd.errors import ConfigError
from spckd.eval.metrics import SSIM_WINDOW, psnr, ssim
from spckd.models.config import NoiseKind, NoiseSpec
from spckd.models.metrics import MetricRecord
from spckd.numerics.tensor import Tensor, no_grad
from spckd.recovery.network import RecoveryNet, unrolled_forward
from spckd.sensing.aperture import CodedApertureBank
from spckd.sensing.operators import spc_forward

logger = structlog.get_logger(__name__)


@dataclass
class EvaluationResult:
    """Means over the evaluated samples."""

    psnr_db: float
    ssim: float | None
    mse: float
    stage_psnr: list[float] = field(default_factory=list)
    count: int = 0
    seconds: float = 0.0

    def to_record(
        self, id: str, role: Any, gamma_s: float, gamma_t: float | None = None
    ) -> MetricRecord:
        return MetricRecord(
            id=id,
            role=role,
            gamma_t=gamma_t,
            gamma_s=gamma_s,
            psnr_db=self.psnr_db,
            ssim=self.ssim if self.ssim is not None else 0.0,
            stage_psnr=self.stage_psnr,
            seconds=self.seconds,
            count=self.count,
        )


@dataclass
class _BatchMetrics:
    psnr: NDArray[np.float64]
    ssim: NDArray[np.float64] | None
    sq_error: NDArray[np.float64]
    stage_psnr: NDArray[np.float64]  # (samples, L)


def evaluate(
    net: RecoveryNet,
    bank: CodedApertureBank,
    dataset: Dataset,
    batch_size: int = 32,
    threads: int | None = None,
    noise: NoiseSpec | None = None,
    noise_seed: int = 0,
    compute_ssim: bool = True,
) -> EvaluationResult:
    """Mean PSNR/SSIM of x^L and per-stage mean PSNR over ``dataset``.

    The realized aperture is used and nothing is recorded on a tape. Batches
    run on up to ``threads`` workers (default ``SPCKD_THREADS``) and are
    reduced in dataset order, so results do not depend on scheduling.
    """
    if len(dataset) == 0:
        raise ConfigError("Cannot evaluate an empty dataset")
    shape = bank.shape
    workers = threads if threads is not None else get_settings().threads
    with_ssim = compute_ssim and min(shape.height, shape.width) >= SSIM_WINDOW
    started = time.perf_counter()
    with no_grad():
        h = bank.realize()
    vectors = dataset.vectors.astype(bank.latent.dtype)

    def run(batch_index: int, indices: NDArray[Any]) -> _BatchMetrics:
        x = vectors[indices]
        with no_grad():
            rng = np.random.default_rng(noise_seed + batch_index)
            active = noise if noise is not None and noise.kind != NoiseKind.NONE else None
            y = spc_forward(bank, Tensor(x), noise=active, rng=rng, matrix=h)
            trace = unrolled_forward(net, bank, y, matrix=h)
        recon = trace.reconstruction.data
        stages = np.array(
            [[psnr(x_k.data[i], x[i]) for x_k in trace.x_stages] for i in range(len(indices))]
        )
        ssims = None
        if with_ssim:
            truth = unflatten_scene(x, shape.height, shape.width, shape.bands)
            estimate = unflatten_scene(recon, shape.height, shape.width, shape.bands)
            ssims = np.array([ssim(estimate[i], truth[i]) for i in range(len(indices))])
        return _BatchMetrics(
            psnr=stages[:, -1],
            ssim=ssims,
            sq_error=np.mean((recon.astype(np.float64) - x) ** 2, axis=1),
            stage_psnr=stages,
        )

    batches = list(dataset.batches(batch_size))
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(batches)), batches))
    else:
        results = [run(i, b) for i, b in enumerate(batches)]

    psnrs = np.concatenate([r.psnr for r in results])
    stage = np.concatenate([r.stage_psnr for r in results])
    result = EvaluationResult(
        psnr_db=float(np.mean(psnrs)),
        ssim=float(np.mean(np.concatenate([r.ssim for r in results if r.ssim is not None])))
        if with_ssim
        else None,
        mse=float(np.mean(np.concatenate([r.sq_error for r in results]))),
        stage_psnr=[float(v) for v in stage.mean(axis=0)],
        count=len(dataset),
        seconds=time.perf_counter() - started,
    )
    logger.debug(
        "evaluation_completed",
        count=result.count,
        psnr_db=result.psnr_db,
        ssim=result.ssim,
        workers=workers,
    )
    return result
