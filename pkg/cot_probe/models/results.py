"""Per-condition aggregates."""

from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field

UNDEFINED_MARK = "n/a"


class Shade(str, Enum):
    NONE = "none"
    LIGHT = "light"
    DARK = "dark"


class ConditionResult(BaseModel):
    """
    Итог одного условия.

    accuracy и se равны None, если у условия нет ни одного успешного ответа.
    """

    model_config = ConfigDict(frozen=True)

    condition_id: str
    pipeline: str = ""
    mode: str = "ret"
    noise_k: int = 0
    n_total: int = Field(default=0, ge=0)
    n_success: int = Field(ge=0)
    n_correct: int = Field(ge=0)
    accuracy: Annotated[float, Field(ge=0.0, le=1.0)] | None
    se: Annotated[float, Field(ge=0.0)] | None
    delta_vs_baseline: float | None = None
    shade: Shade = Shade.NONE

    @property
    def defined(self) -> bool:
        return self.accuracy is not None

    @property
    def accuracy_pct(self) -> str:
        if self.accuracy is None:
            return UNDEFINED_MARK
        return f"{100 * self.accuracy:.2f}"

    @property
    def se_pp(self) -> str:
        if self.se is None:
            return UNDEFINED_MARK
        return f"{100 * self.se:.2f}"

    @property
    def delta_pp(self) -> str:
        if self.delta_vs_baseline is None:
            return "---"
        value = round(self.delta_vs_baseline, 1)
        if value == 0:
            return "0.0"
        return f"{value:+.1f}"
