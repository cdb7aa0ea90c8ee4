"""Run-level configuration loaded from a JSON file and CLI overrides."""

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cot_probe.models.extractor import ExtractorKind, ExtractorStrategy
from cot_probe.models.inference import InferenceParams
from cot_probe.models.prompt import EvalMode
from cot_probe.models.verdict import ExtractionRule
from cot_probe.services.pipeline import parse_pipeline
from cot_probe.utils.errors import CotProbeError


class RunConfigError(CotProbeError):
    """Некорректный файл конфигурации запуска."""

    pass


class BackendSpec(BaseModel):
    """Live endpoint, replay archive or surrogate extractor."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["live", "replay", "surrogate"]
    model_id: str | None = None
    archive: Path | None = None
    strategy: ExtractorStrategy | None = None

    @model_validator(mode="after")
    def _kind_fields(self) -> "BackendSpec":
        if self.kind == "replay" and self.archive is None:
            raise ValueError("replay backend needs an archive path")
        if self.kind == "surrogate" and self.strategy is None:
            raise ValueError("surrogate backend needs an extractor strategy")
        return self

    @classmethod
    def parse(cls, text: str) -> "BackendSpec":
        """Разбирает строку вида live:<model>, replay:<archive>, surrogate:<strategy>."""
        kind, sep, arg = text.partition(":")
        kind = kind.strip()
        arg = arg.strip()
        if not sep or not arg:
            raise ValueError(f"backend spec must look like <kind>:<argument>, got {text!r}")
        if kind == "live":
            return cls(kind="live", model_id=arg)
        if kind == "replay":
            return cls(kind="replay", archive=Path(arg))
        if kind == "surrogate":
            return cls(kind="surrogate", strategy=ExtractorStrategy(kind=ExtractorKind(arg)))
        raise ValueError(f"unknown backend kind {kind!r}")

    def label(self) -> str:
        if self.kind == "live":
            return f"live:{self.model_id or 'default'}"
        if self.kind == "replay":
            return f"replay:{self.archive}"
        assert self.strategy is not None
        return f"surrogate:{self.strategy.kind.value}"


class JudgeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["local", "external"] = "local"
    extraction_rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX
    backend: BackendSpec | None = None
    params: InferenceParams = InferenceParams(temperature=0.0, max_output_tokens=16)
    template: Path | None = None

    @field_validator("backend", mode="before")
    @classmethod
    def _backend_from_string(cls, value: Any) -> Any:
        return BackendSpec.parse(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _external_needs_backend(self) -> "JudgeConfig":
        if self.kind == "external" and self.backend is None:
            raise ValueError("external judge needs a backend")
        return self


class SweepGrid(BaseModel):
    """Cross product of pipelines, noise multipliers and modes."""

    model_config = ConfigDict(frozen=True)

    pipelines: list[str] = Field(default_factory=lambda: [""])
    noise: list[int] = Field(default_factory=lambda: [0])
    modes: list[EvalMode] = Field(default_factory=list)
    baseline: str | None = Field(default=None, description="Baseline condition id")

    @field_validator("pipelines")
    @classmethod
    def _pipelines_parse(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("grid needs at least one pipeline")
        for dsl in value:
            parse_pipeline(dsl)
        return value

    @field_validator("noise")
    @classmethod
    def _noise_non_negative(cls, value: list[int]) -> list[int]:
        if not value or any(k < 0 for k in value):
            raise ValueError("noise multipliers must be a non-empty list of k >= 0")
        return value


class RunConfig(BaseModel):
    """
    Конфигурация одного запуска (или свипа).

    Все пути относительны текущему каталогу.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dataset: Path
    pipeline: str = ""
    mode: EvalMode = EvalMode.RET
    include_question: bool = True
    include_chain: bool = True
    backend: BackendSpec = BackendSpec(
        kind="surrogate", strategy=ExtractorStrategy(kind=ExtractorKind.AFTER_ANCHOR)
    )
    inference: InferenceParams = InferenceParams()
    judge: JudgeConfig = JudgeConfig()
    run_seed: int = Field(default=0, ge=0, lt=1 << 64)
    parallel: int = Field(default=8, ge=1)
    out_dir: Path = Path("runs/latest")
    resume: bool = False
    count_refusals: bool = True
    template: Path | None = None
    vocabularies: dict[str, Path] = Field(default_factory=dict)
    tokenizer_schemes: dict[str, Path] = Field(default_factory=dict)
    grid: SweepGrid | None = None

    @field_validator("pipeline")
    @classmethod
    def _pipeline_parses(cls, value: str) -> str:
        parse_pipeline(value)
        return value

    @field_validator("backend", mode="before")
    @classmethod
    def _backend_from_string(cls, value: Any) -> Any:
        if isinstance(value, str):
            return BackendSpec.parse(value)
        return value


def load_run_config(path: Path, **overrides: Any) -> RunConfig:
    """
    Загружает RunConfig из JSON-файла.

    Args:
        path: Путь к JSON-файлу
        overrides: Значения, перекрывающие файл (None игнорируется)

    Raises:
        RunConfigError: Файл не найден или не является JSON-объектом
    """
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise RunConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise RunConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}")
    if not isinstance(data, dict):
        raise RunConfigError(f"{path}: config must be a JSON object")

    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.model_validate(data)
