"""Answer judges: numeric, multiple choice, code stub and an external model judge."""

import logging
import re
from pathlib import Path
from string import Template
from typing import Protocol

from cot_probe.models.inference import InferenceParams, ResponseStatus
from cot_probe.models.prompt import EvalMode
from cot_probe.models.records import Benchmark, ReasoningRecord
from cot_probe.models.verdict import ExtractionRule, JudgeMethod, Verdict
from cot_probe.services.backends import Backend
from cot_probe.services.prompting import ANSWER_PREFIX
from cot_probe.utils.errors import CotProbeError
from cot_probe.utils.segmentation import canonical_number

logger = logging.getLogger(__name__)

CHOICES = ("A", "B", "C", "D")
GOLD_MIN, GOLD_MAX = 0, 999

_BOXED_RE = re.compile(r"\\boxed\s*\{([^{}]*)\}")
_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
# Минус считается знаком, только если перед ним нет буквы или цифры
_NUMBER_RE = re.compile(r"(?:(?<![0-9A-Za-z])-)?[0-9]+")

_CHOICE_PATTERNS = (
    re.compile(r"\(([A-Da-d])\)"),
    re.compile(r"\boption\s+([A-Da-d])\b", re.IGNORECASE),
    re.compile(r"\b(?i:answer)\s*(?:(?i:is)|:)?\s*\(?([A-D])\b"),
    # Строчная буква только в явной форме: "b." / "b)" / конец текста
    re.compile(r"\b(?i:answer)\s*(?:(?i:is)|:)?\s*\(?([a-d])(?=[.)]|\s*$)"),
    re.compile(r"\b([A-D])\b"),
)
_CPP_BLOCK_RE = re.compile(r"```(?:cpp|c\+\+)?\s*\n(.*?)(?:```|\Z)", re.DOTALL)

EXTERNAL_JUDGE_TEMPLATE = Template(
    "You are grading an answer to a benchmark question.\n\n"
    "Reference answer: ${gold}\n\n"
    "Candidate response:\n${response}\n\n"
    "Does the final answer in the candidate response match the reference answer? "
    "Reply with YES or NO only."
)
_YES_NO_RE = re.compile(r"^\W*(yes|no)\b", re.IGNORECASE)


class JudgmentUnavailableError(CotProbeError):
    """Внешний судья не ответил."""

    pass


class CodeExecutor(Protocol):
    """Pluggable execution judge for code answers."""

    async def passes(self, code: str, record: ReasoningRecord) -> bool: ...


def normalize_numeric_text(response: str) -> str:
    """Strips \\boxed{} wrappers, dollar signs and thousands separators."""
    text = _BOXED_RE.sub(r" \1 ", response)
    text = text.replace("$", " ")
    return _THOUSANDS_RE.sub("", text)


def extract_number(
    response: str,
    rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX,
    *,
    continuation: bool = False,
    prefix: str = ANSWER_PREFIX,
) -> str | None:
    """
    Извлекает числовой ответ из ответа модели.

    Args:
        response: Текст ответа
        rule: Правило выбора числа
        continuation: Ответ является продолжением ret-префикса
        prefix: Фраза, после которой ищется ответ

    Returns:
        Нормализованная запись числа ("070" -> "70") или None, если цифр нет
    """
    text = normalize_numeric_text(response)
    matches = list(_NUMBER_RE.finditer(text))
    if not matches:
        return None

    chosen = matches[-1]
    if rule == ExtractionRule.FIRST_AFTER_PREFIX:
        if continuation:
            chosen = matches[0]
        else:
            anchor = text.lower().rfind(prefix.lower())
            if anchor != -1:
                after = [m for m in matches if m.start() >= anchor + len(prefix)]
                if after:
                    chosen = after[0]

    return canonical_number(chosen.group())


def parse_gold_number(gold: str | int) -> int:
    value = int(gold)
    if not GOLD_MIN <= value <= GOLD_MAX:
        raise ValueError(f"numeric gold answer out of range: {gold}")
    return value


def judge_numeric(
    response: str,
    gold: str | int,
    *,
    rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX,
    continuation: bool = False,
) -> Verdict:
    target = parse_gold_number(gold)
    value = extract_number(response, rule, continuation=continuation)
    if value is None:
        return Verdict(correct=False, extracted=None, method=JudgeMethod.NUMERIC, note="no number")
    return Verdict(correct=value == str(target), extracted=value, method=JudgeMethod.NUMERIC)


def extract_choice(response: str) -> str | None:
    """Последняя по позиции найденная буква варианта."""
    best: tuple[int, str] | None = None
    for pattern in _CHOICE_PATTERNS:
        for match in pattern.finditer(response):
            pos = match.start(1)
            if best is None or pos > best[0]:
                best = (pos, match.group(1).upper())
    return best[1] if best else None


def judge_choice(response: str, gold: str) -> Verdict:
    target = gold.strip().upper()
    if target not in CHOICES:
        raise ValueError(f"choice gold answer must be one of {CHOICES}: {gold!r}")
    letter = extract_choice(response)
    if letter is None:
        return Verdict(correct=False, extracted=None, method=JudgeMethod.CHOICE, note="no option")
    return Verdict(correct=letter == target, extracted=letter, method=JudgeMethod.CHOICE)


def extract_code(response: str, *, continuation: bool = False) -> str | None:
    if continuation:
        # Ответ продолжает уже открытый ```cpp блок
        body = response.split("```", 1)[0]
        return body.strip("\n") or None
    blocks = _CPP_BLOCK_RE.findall(response)
    return blocks[-1].strip("\n") if blocks else None


def judge_code(response: str, *, continuation: bool = False) -> Verdict:
    """Stub judge: records the code block, never executes it."""
    code = extract_code(response, continuation=continuation)
    return Verdict(
        correct=False,
        extracted=code,
        method=JudgeMethod.CODE,
        note="code recorded, not executed" if code else "no code block",
    )


def judge_local(
    response: str,
    record: ReasoningRecord,
    *,
    rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX,
    continuation: bool = False,
) -> Verdict:
    if record.benchmark == Benchmark.MATH_INTEGER:
        return judge_numeric(response, record.gold_answer, rule=rule, continuation=continuation)
    if record.benchmark == Benchmark.MULTIPLE_CHOICE:
        return judge_choice(response, record.gold_answer)
    return judge_code(response, continuation=continuation)


def render_judge_prompt(response: str, gold: str, template: Template | None = None) -> str:
    return (template or EXTERNAL_JUDGE_TEMPLATE).substitute(gold=gold, response=response)


def load_judge_template(path: Path) -> Template:
    source = path.read_text(encoding="utf-8")
    for slot in ("${gold}", "${response}"):
        if slot not in source:
            raise ValueError(f"judge template {path} lacks the {slot} slot")
    return Template(source)


async def judge_external(
    response: str,
    record: ReasoningRecord,
    judge_backend: Backend,
    params: InferenceParams,
    *,
    template: Template | None = None,
    rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX,
    continuation: bool = False,
) -> Verdict:
    """
    Спрашивает внешнюю модель-судью.

    Args:
        response: Ответ оцениваемой модели
        record: Запись с эталонным ответом
        judge_backend: Бэкенд судьи
        params: Параметры инференса судьи

    Returns:
        Вердикт; при неразборчивом ответе судьи - вердикт локального судьи с пометкой

    Raises:
        JudgmentUnavailableError: Судья не вернул ответ (таймаут, отказ, сбой)
    """
    prompt = render_judge_prompt(response, record.gold_answer, template)
    reply = await judge_backend.complete(prompt, params)
    if reply.status != ResponseStatus.OK or reply.text is None:
        raise JudgmentUnavailableError(
            f"judge returned {reply.status.value} for record {record.id}: {reply.error}"
        )

    match = _YES_NO_RE.match(reply.text)
    if match is None:
        logger.warning(f"Unparseable judge output for record {record.id}; using local judge")
        local = judge_local(response, record, rule=rule, continuation=continuation)
        return local.model_copy(update={"note": "judge output unparseable; local fallback"})

    correct = match.group(1).lower() == "yes"
    extracted = response.strip() or None
    if correct and extracted is None:
        extracted = record.gold_answer
    return Verdict(correct=correct, extracted=extracted, method=JudgeMethod.EXTERNAL)


class Judge:
    """Per-benchmark judge selection for a run."""

    def __init__(
        self,
        rule: ExtractionRule = ExtractionRule.FIRST_AFTER_PREFIX,
        external: Backend | None = None,
        external_params: InferenceParams | None = None,
        template: Template | None = None,
        code_executor: CodeExecutor | None = None,
    ) -> None:
        self.rule = rule
        self.external = external
        self.external_params = external_params or InferenceParams(temperature=0.0)
        self.template = template
        self.code_executor = code_executor

    async def judge(self, response: str, record: ReasoningRecord, mode: EvalMode) -> Verdict:
        continuation = mode == EvalMode.RET
        if record.benchmark == Benchmark.CODE and self.code_executor is not None:
            code = extract_code(response, continuation=continuation)
            if code is None:
                return Verdict(correct=False, method=JudgeMethod.CODE, note="no code block")
            passed = await self.code_executor.passes(code, record)
            return Verdict(correct=passed, extracted=code, method=JudgeMethod.CODE)

        if self.external is not None:
            return await judge_external(
                response,
                record,
                self.external,
                self.external_params,
                template=self.template,
                rule=self.rule,
                continuation=continuation,
            )
        return judge_local(response, record, rule=self.rule, continuation=continuation)

    async def aclose(self) -> None:
        if self.external is not None:
            await self.external.aclose()
