"""Evaluation prompt rendering for Gen and Ret modes."""

import logging
from pathlib import Path
from string import Template

from cot_probe.models.prompt import EvalMode, EvalPrompt
from cot_probe.models.records import Benchmark, ReasoningRecord
from cot_probe.utils.errors import CotProbeError

logger = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"
SECTION_SEPARATOR = "\n\n"

ANSWER_PREFIX = "Thus, the answer is"
CODE_PREFIX = "Thus, the code is\n```cpp\n"

RET_PREFIXES: dict[Benchmark, str] = {
    Benchmark.MATH_INTEGER: ANSWER_PREFIX,
    Benchmark.MULTIPLE_CHOICE: ANSWER_PREFIX,
    Benchmark.CODE: CODE_PREFIX,
}


class PromptError(CotProbeError):
    """Ошибка построения промпта."""

    pass


class PromptTemplate:
    """Override template with ${question}, ${chain} and ${prefix} slots."""

    SLOTS = ("question", "chain", "prefix")

    def __init__(self, source: str) -> None:
        # Хвостовой перевод строки файла не должен идти после префикса
        source = source.rstrip("\n")
        self.template = Template(source)
        names = {
            m.group("named") or m.group("braced")
            for m in self.template.pattern.finditer(source)
            if m.group("named") or m.group("braced")
        }
        unknown = names - set(self.SLOTS)
        if unknown:
            raise PromptError(f"Unknown template slots: {sorted(unknown)}")
        if not source.endswith(("${prefix}", "$prefix")):
            raise PromptError("Template must end with the ${prefix} slot")

    @classmethod
    def from_file(cls, path: Path) -> "PromptTemplate":
        try:
            return cls(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise PromptError(f"Не удалось прочитать шаблон {path}: {e}")

    def render(self, question: str | None, chain: str | None, prefix: str) -> str:
        return self.template.substitute(
            question=question or "", chain=chain or "", prefix=prefix
        )


def ret_prefix(benchmark: Benchmark) -> str:
    return RET_PREFIXES[benchmark]


def build_prompt(
    record: ReasoningRecord,
    chain: str | None,
    mode: EvalMode,
    include_question: bool = True,
    include_chain: bool = True,
    template: PromptTemplate | None = None,
) -> EvalPrompt:
    """
    Собирает промпт: [вопрос] + [цепочка] + [префикс Ret].

    Args:
        record: Исходная запись
        chain: Преобразованная цепочка
        mode: gen или ret
        include_question: False реализует R_q
        include_chain: False реализует R_r
        template: Необязательный шаблон-override

    Returns:
        EvalPrompt с отрендеренным текстом

    Raises:
        PromptError: include_chain без цепочки
    """
    if include_chain and chain is None:
        raise PromptError("include_chain=True requires a transformed chain")

    question = record.question if include_question else None
    body_chain = chain if include_chain else None
    prefix = ret_prefix(record.benchmark) if mode == EvalMode.RET else ""

    if template is not None:
        text = template.render(question, body_chain, prefix)
    else:
        sections = [s for s in (question, body_chain) if s is not None]
        text = SECTION_SEPARATOR.join(sections)
        if prefix:
            text = f"{text}{SECTION_SEPARATOR}{prefix}" if text else prefix

    return EvalPrompt(
        question=question,
        chain=body_chain,
        mode=mode,
        prefix=prefix,
        benchmark=record.benchmark,
        text=text,
    )
