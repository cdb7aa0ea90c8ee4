"""Surrogate extractor strategies."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, model_validator

DEFAULT_ANCHORS = ("answer is", "Thus answer", "answer:")


class ExtractorKind(str, Enum):
    LAST_NUMBER = "last_number"
    MOST_FREQUENT_NUMBER = "most_frequent_number"
    AFTER_ANCHOR = "after_anchor"


class ExtractorStrategy(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ExtractorKind
    anchors: tuple[str, ...] = DEFAULT_ANCHORS

    @model_validator(mode="after")
    def _anchors_for_after_anchor(self) -> "ExtractorStrategy":
        if self.kind == ExtractorKind.AFTER_ANCHOR and not any(a.strip() for a in self.anchors):
            raise ValueError("after_anchor requires at least one anchor phrase")
        return self
