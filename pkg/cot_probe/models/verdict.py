"""Judge verdicts."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator

from cot_probe.models.inference import ResponseStatus


class JudgeMethod(str, Enum):
    NUMERIC = "numeric"
    CHOICE = "choice"
    EXTERNAL = "external"
    CODE = "code"


class Verdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    correct: bool
    extracted: str | None = None
    method: JudgeMethod
    note: str = ""

    @model_validator(mode="after")
    def _correct_needs_answer(self) -> "Verdict":
        if self.correct and self.extracted is None:
            raise ValueError("a correct verdict must carry the extracted answer")
        return self


class VerdictEntry(BaseModel):
    """One line of the verdict archive: a record judged under one grid cell."""

    model_config = ConfigDict(frozen=True)

    cell: str
    record_id: str
    status: ResponseStatus
    verdict: Verdict | None = None
    response_key: str | None = None
    note: str = ""


class ExtractionRule(str, Enum):
    """Which digit run a numeric judge reads."""

    FIRST_AFTER_PREFIX = "first_after_prefix"
    LAST = "last"
