"""Pydantic model for evaluation results."""

from pydantic import BaseModel, Field

from spckd.models.config import Role


class MetricRecord(BaseModel):
    """Reconstruction quality of one system on one test set."""

    id: str = Field(..., description="Experiment identifier")
    role: Role = Field(..., description="Training role of the evaluated system")
    gamma_t: float | None = Field(default=None, description="Teacher compression ratio (KD only)")
    gamma_s: float = Field(..., description="Compression ratio of the evaluated system")
    psnr_db: float = Field(..., description="Mean PSNR of x^L in dB")
    ssim: float = Field(..., ge=-1.0, le=1.0, description="Mean SSIM of x^L")
    stage_psnr: list[float] = Field(default_factory=list, description="Mean PSNR of x^1..x^L")
    seconds: float = Field(default=0.0, ge=0.0, description="Wall-clock evaluation time")
    count: int = Field(default=0, ge=0, description="Number of evaluated samples")
