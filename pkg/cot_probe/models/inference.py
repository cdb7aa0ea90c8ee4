"""Inference parameters and model responses."""

from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_MODEL_ID = "openai/gpt-oss-120b"


class InferenceParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    model_id: str = Field(default=DEFAULT_MODEL_ID, min_length=1)
    temperature: float = Field(default=0.5, ge=0.0, le=2.0)
    max_output_tokens: int = Field(default=5000, gt=0)
    # None: COT_PROBE_READ_TIMEOUT_SEC
    timeout_sec: Annotated[float, Field(gt=0)] | None = None
    max_retries: int = Field(default=5, ge=1, le=10)

    def archive_view(self) -> dict[str, object]:
        """Fields that identify a request in the response archive."""
        return {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
        }


class ResponseStatus(str, Enum):
    OK = "ok"
    REFUSED = "refused"
    TRANSPORT_ERROR = "transport_error"
    TIMEOUT = "timeout"


class ModelResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str | None = None
    status: ResponseStatus
    usage: dict[str, int] | None = None
    latency_sec: float = 0.0
    attempts: int = 1
    reasoning: str | None = None
    error: str | None = None

    @model_validator(mode="after")
    def _text_iff_ok(self) -> "ModelResponse":
        if (self.status == ResponseStatus.OK) != (self.text is not None):
            raise ValueError("text must be present exactly when status is ok")
        return self

    @classmethod
    def failed(cls, status: ResponseStatus, error: str, attempts: int = 1) -> "ModelResponse":
        return cls(status=status, error=error, attempts=attempts)
