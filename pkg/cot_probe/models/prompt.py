"""Rendered evaluation prompts."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator

from cot_probe.models.records import Benchmark


class EvalMode(str, Enum):
    GEN = "gen"
    RET = "ret"


class EvalPrompt(BaseModel):
    model_config = ConfigDict(frozen=True)

    question: str | None
    chain: str | None
    mode: EvalMode
    prefix: str
    benchmark: Benchmark
    text: str

    @model_validator(mode="after")
    def _prefix_is_last(self) -> "EvalPrompt":
        if self.mode == EvalMode.RET:
            if not self.prefix:
                raise ValueError("ret mode requires a completion prefix")
            if not self.text.endswith(self.prefix):
                raise ValueError("completion prefix must end the rendered prompt")
        return self
