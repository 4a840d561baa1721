"""Pydantic models for the SPKD checkpoint header."""

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt

from spckd.models.config import ExperimentConfig


class TensorEntry(BaseModel):
    """One tensor in the checkpoint manifest."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1, description="Parameter name")
    shape: list[NonNegativeInt] = Field(..., description="Array shape")
    offset: int = Field(..., ge=0, description="Byte offset into the payload section")


class CheckpointHeader(BaseModel):
    """JSON header written after the SPKD magic and version."""

    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig = Field(..., description="Configuration the system was built from")
    epoch: int = Field(default=0, ge=0, description="Epoch of the stored parameters")
    tensors: list[TensorEntry] = Field(default_factory=list, description="Tensor manifest")
    payload_bytes: int = Field(..., ge=0, description="Total size of the float32 payloads")
