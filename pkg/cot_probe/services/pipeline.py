"""Pipeline DSL: "remove_alphabet,line_shuffle", "inject_noise(k=3)"."""

import logging

from pydantic import ValidationError

from cot_probe.config.settings import get_settings
from cot_probe.models.pipeline import (
    PROCESSOR_NAMES,
    REMOVE_CHAIN,
    REMOVE_QUESTION,
    ProcessorKind,
    ProcessorSpec,
    TransformPipeline,
)
from cot_probe.utils.errors import CotProbeError

logger = logging.getLogger(__name__)

IDENTITY_NAMES = {"", "none", "original"}

# Имя параметра в DSL -> поле ProcessorSpec
_PARAM_FIELDS = {
    "k": "k",
    "false_answer": "false_answer",
    "sentence": "sentence",
    "char": "mask_char",
    "mask_char": "mask_char",
    "vocab": "vocab_id",
    "scope": "scope",
    "scheme": "scheme",
    "salt": "seed_salt",
}


class PipelineParseError(CotProbeError):
    """Ошибка разбора строки пайплайна."""

    def __init__(self, message: str, position: int | None = None) -> None:
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _skip_spaces(self) -> None:
        while self._peek().isspace():
            self.pos += 1

    def _identifier(self) -> str:
        self._skip_spaces()
        start = self.pos
        while self._peek() and (self._peek().isalnum() or self._peek() == "_"):
            self.pos += 1
        return self.text[start : self.pos]

    def _value(self) -> str:
        self._skip_spaces()
        if self._peek() == '"':
            return self._quoted()
        start = self.pos
        while self._peek() and self._peek() not in ",)":
            self.pos += 1
        return self.text[start : self.pos].strip()

    def _quoted(self) -> str:
        start = self.pos
        self.pos += 1
        chars: list[str] = []
        while True:
            c = self._peek()
            if not c:
                raise PipelineParseError("unterminated string", start)
            self.pos += 1
            if c == "\\":
                escaped = self._peek()
                if not escaped:
                    raise PipelineParseError("dangling escape", self.pos)
                chars.append({"n": "\n", "t": "\t"}.get(escaped, escaped))
                self.pos += 1
            elif c == '"':
                return "".join(chars)
            else:
                chars.append(c)

    def _params(self) -> dict[str, str]:
        params: dict[str, str] = {}
        self.pos += 1  # "("
        self._skip_spaces()
        if self._peek() == ")":
            self.pos += 1
            return params
        while True:
            key_pos = self.pos
            key = self._identifier()
            if not key:
                raise PipelineParseError("expected parameter name", key_pos)
            self._skip_spaces()
            if self._peek() != "=":
                raise PipelineParseError(f"expected '=' after {key!r}", self.pos)
            self.pos += 1
            if key in params:
                raise PipelineParseError(f"duplicate parameter {key!r}", key_pos)
            params[key] = self._value()
            self._skip_spaces()
            c = self._peek()
            self.pos += 1
            if c == ")":
                return params
            if c != ",":
                raise PipelineParseError("expected ',' or ')'", self.pos - 1)

    def steps(self) -> list[tuple[str, dict[str, str], int]]:
        result: list[tuple[str, dict[str, str], int]] = []
        while True:
            self._skip_spaces()
            start = self.pos
            name = self._identifier()
            if not name:
                raise PipelineParseError("expected processor name", start)
            self._skip_spaces()
            params = self._params() if self._peek() == "(" else {}
            result.append((name, params, start))
            self._skip_spaces()
            if not self._peek():
                return result
            if self._peek() != ",":
                raise PipelineParseError("expected ','", self.pos)
            self.pos += 1


def _build_spec(name: str, params: dict[str, str], position: int) -> ProcessorSpec:
    if name not in PROCESSOR_NAMES:
        raise PipelineParseError(f"unknown processor {name!r}", position)
    fields: dict[str, object] = {}
    for key, value in params.items():
        if key not in _PARAM_FIELDS:
            raise PipelineParseError(f"unknown parameter {key!r} for {name}", position)
        fields[_PARAM_FIELDS[key]] = value
    if PROCESSOR_NAMES[name][0] == ProcessorKind.MASK:
        fields.setdefault("mask_char", get_settings().mask_char)
    try:
        return ProcessorSpec.named(name, **fields)
    except ValidationError as e:
        first = e.errors()[0]
        raise PipelineParseError(f"invalid parameters for {name}: {first['msg']}", position)


def parse_pipeline(dsl: str, run_seed: int = 0) -> TransformPipeline:
    """
    Разбирает строку пайплайна.

    Шаги применяются слева направо; remove_question/remove_chain
    становятся флагами промпта, а не шагами.

    Args:
        dsl: Строка вида "remove_alphabet,line_shuffle"
        run_seed: Seed запуска

    Returns:
        TransformPipeline

    Raises:
        PipelineParseError: Синтаксическая ошибка или неизвестный процессор
    """
    if dsl.strip().lower() in IDENTITY_NAMES:
        return TransformPipeline(run_seed=run_seed)

    include_question = True
    include_chain = True
    steps: list[ProcessorSpec] = []
    for name, params, position in _Parser(dsl).steps():
        if name in (REMOVE_QUESTION, REMOVE_CHAIN):
            if params:
                raise PipelineParseError(f"{name} takes no parameters", position)
            if name == REMOVE_QUESTION:
                include_question = False
            else:
                include_chain = False
            continue
        steps.append(_build_spec(name, params, position))

    return TransformPipeline(
        steps=tuple(steps),
        run_seed=run_seed,
        include_question=include_question,
        include_chain=include_chain,
    )


def condition_label(pipeline: TransformPipeline) -> str:
    """DSL form used in reports; the empty pipeline is "original"."""
    return pipeline.to_dsl() or "original"


def with_noise(pipeline: TransformPipeline, k: int) -> TransformPipeline:
    """Prepend inject_noise(k) so noise lines go through the remaining steps."""
    if k <= 0:
        return pipeline
    noise = ProcessorSpec.named("inject_noise", k=k)
    return pipeline.model_copy(update={"steps": (noise, *pipeline.steps)})
