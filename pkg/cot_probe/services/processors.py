"""Chain-level transformations: shuffle, mask, remove, randomize, inject_noise."""

import logging
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

from cot_probe.models.pipeline import (
    DEFAULT_FALSE_ANSWER,
    DEFAULT_MASK_CHAR,
    NOISE_TEMPLATE,
    ProcessorKind,
    ProcessorSpec,
    Target,
    TransformPipeline,
)
from cot_probe.models.records import ReasoningRecord
from cot_probe.utils.errors import CotProbeError
from cot_probe.utils.rng import SeededRng, mix
from cot_probe.utils.segmentation import (
    DEFAULT_SCHEME,
    CharClass,
    Span,
    classify_char,
    digit_runs,
    read_vocabulary,
    split_lines,
    split_words,
    tokenize_subwords,
    word_spans,
)

logger = logging.getLogger(__name__)

DEFAULT_NOISE_SENTENCE = NOISE_TEMPLATE.format(answer=DEFAULT_FALSE_ANSWER)

_OPTION_RE = re.compile(r"[A-Za-z]")


class ProcessorError(CotProbeError):
    """Ошибка применения процессора к цепочке."""

    pass


class PipelineStepError(ProcessorError):
    """Ошибка на конкретном шаге пайплайна."""

    def __init__(self, step_index: int, step_name: str, cause: Exception) -> None:
        self.step_index = step_index
        self.step_name = step_name
        self.cause = cause
        super().__init__(f"step {step_index} ({step_name}) failed: {cause}")


# Словари для random_token / random_word(scope=corpus)
_VOCABULARIES: dict[str, tuple[str, ...]] = {}


def register_vocabulary(vocab_id: str, tokens: Iterable[str]) -> None:
    items = tuple(t for t in tokens if t)
    if not items:
        raise ProcessorError(f"Vocabulary {vocab_id!r} is empty")
    _VOCABULARIES[vocab_id] = items
    logger.info(f"Registered vocabulary {vocab_id!r} ({len(items)} entries)")


def load_vocabulary(vocab_id: str, path: Path) -> None:
    register_vocabulary(vocab_id, read_vocabulary(path))


def get_vocabulary(vocab_id: str) -> tuple[str, ...]:
    try:
        return _VOCABULARIES[vocab_id]
    except KeyError:
        raise ProcessorError(f"Unknown vocabulary: {vocab_id!r}")


def answer_spans(text: str, answer: str) -> list[Span]:
    """
    Находит вхождения ответа в цепочке.

    Целые числа сравниваются с максимальными цепочками цифр ("70" не
    совпадает внутри "170"), буквы вариантов - как отдельные токены,
    прочий текст - как непересекающиеся подстроки.

    Args:
        text: Цепочка рассуждений
        answer: Эталонный ответ

    Returns:
        Отсортированные непересекающиеся спаны

    Raises:
        ProcessorError: Пустой ответ
    """
    answer = answer.strip()
    if not answer:
        raise ProcessorError("answer-dependent processor requires a non-empty answer")

    if all("0" <= c <= "9" for c in answer):
        return [(s, e) for s, e in digit_runs(text) if text[s:e] == answer]

    if _OPTION_RE.fullmatch(answer):
        pattern = rf"(?<![0-9A-Za-z]){re.escape(answer)}(?![0-9A-Za-z])"
        return [m.span() for m in re.finditer(pattern, text)]

    spans: list[Span] = []
    start = text.find(answer)
    while start != -1:
        spans.append((start, start + len(answer)))
        start = text.find(answer, start + len(answer))
    return spans


def count_answer_occurrences(text: str, answer: str) -> int:
    return len(answer_spans(text, answer))


def shuffle(
    chain: str, granularity: Target, rng: SeededRng, scheme: str = DEFAULT_SCHEME
) -> str:
    """
    Переставляет сегменты цепочки (Fisher-Yates).

    token/word склеиваются одним пробелом, line - переводом строки,
    inline_word сохраняет порядок и число строк.
    """
    if granularity == Target.LINE:
        lines = split_lines(chain)
        if len(lines) <= 1:
            return chain
        return "\n".join(rng.permuted(lines))

    if granularity == Target.INLINE_WORD:
        shuffled = []
        for line in split_lines(chain):
            words = split_words(line)
            shuffled.append(" ".join(rng.permuted(words)) if len(words) > 1 else line)
        return "\n".join(shuffled)

    if granularity == Target.WORD:
        segments = split_words(chain)
    elif granularity == Target.TOKEN:
        segments = tokenize_subwords(chain, scheme)
    else:
        raise ProcessorError(f"shuffle does not support granularity {granularity.value}")

    if len(segments) <= 1:
        return chain
    return " ".join(rng.permuted(segments))


def _replace_spans(text: str, spans: Sequence[Span], mask_char: str | None) -> str:
    # mask_char=None означает удаление спанов
    parts: list[str] = []
    cursor = 0
    for start, end in spans:
        parts.append(text[cursor:start])
        if mask_char is not None:
            parts.append(mask_char * (end - start))
        cursor = end
    parts.append(text[cursor:])
    return "".join(parts)


def mask(
    chain: str,
    target: Target,
    answer: str | None = None,
    mask_char: str = DEFAULT_MASK_CHAR,
) -> str:
    """Replace characters of the target class (or answer spans) by mask_char."""
    if target == Target.ALPHABET:
        return "".join(
            mask_char if classify_char(c) == CharClass.ALPHABETIC else c for c in chain
        )
    if target == Target.DIGITS:
        return "".join(mask_char if classify_char(c) == CharClass.DIGIT else c for c in chain)
    if target == Target.ANSWER:
        return _replace_spans(chain, answer_spans(chain, answer or ""), mask_char)
    raise ProcessorError(f"mask does not support target {target.value}")


def remove(chain: str, target: Target, answer: str | None = None) -> str:
    """Delete the target characters or answer spans, keep everything else in order."""
    if target == Target.ALPHABET:
        return "".join(c for c in chain if classify_char(c) != CharClass.ALPHABETIC)
    if target == Target.ANSWER:
        spans = answer_spans(chain, answer or "")
        # Для подстрочных ответов удаление может склеить новое вхождение
        while spans:
            chain = _replace_spans(chain, spans, None)
            spans = answer_spans(chain, answer or "")
        return chain
    raise ProcessorError(f"remove does not support target {target.value}")


def randomize(
    chain: str,
    unit: Target,
    rng: SeededRng,
    vocab: Sequence[str] | None = None,
    scheme: str = DEFAULT_SCHEME,
) -> str:
    """
    Заменяет каждый токен/слово случайным.

    token: равномерно из словаря (по умолчанию - типы токенов самой цепочки),
    результат склеивается пробелами.
    word: i.i.d. из частотного распределения слов цепочки (или vocab),
    пробельная структура сохраняется.
    """
    if unit == Target.TOKEN:
        tokens = tokenize_subwords(chain, scheme)
        pool = sorted(set(tokens)) if vocab is None else list(vocab)
        if not pool:
            if tokens or vocab is not None:
                raise ProcessorError("random_token requires a non-empty vocabulary")
            return chain
        if not tokens:
            return chain
        return " ".join(rng.choice(pool) for _ in tokens)

    if unit == Target.WORD:
        spans = word_spans(chain)
        if not spans:
            return chain
        # Список вхождений = эмпирическое распределение частот
        pool = [chain[s:e] for s, e in spans] if vocab is None else list(vocab)
        if not pool:
            raise ProcessorError("random_word requires a non-empty vocabulary")
        parts: list[str] = []
        cursor = 0
        for start, end in spans:
            parts.append(chain[cursor:start])
            parts.append(rng.choice(pool))
            cursor = end
        parts.append(chain[cursor:])
        return "".join(parts)

    raise ProcessorError(f"randomize does not support unit {unit.value}")


def inject_noise(
    chain: str,
    answer: str,
    k: int,
    rng: SeededRng,
    false_sentence: str = DEFAULT_NOISE_SENTENCE,
) -> str:
    """
    Вставляет k*c строк с ложным ответом, где c - число вхождений ответа.

    Позиции выбираются равномерно без возвращения среди слотов итоговой
    последовательности строк; исходные строки не меняются и идут в прежнем порядке.
    """
    if k < 0:
        raise ProcessorError(f"noise multiplier must be non-negative, got {k}")
    if "\n" in false_sentence:
        raise ProcessorError("noise sentence must be a single line")
    occurrences = count_answer_occurrences(chain, answer)
    n_insert = k * occurrences
    if n_insert == 0:
        return chain

    lines = split_lines(chain)
    total = len(lines) + n_insert
    noise_slots = set(rng.sample_indices(total, n_insert))
    original = iter(lines)
    result = [false_sentence if i in noise_slots else next(original) for i in range(total)]
    logger.debug(f"Inserted {n_insert} noise lines ({occurrences} answer occurrences, k={k})")
    return "\n".join(result)


def apply_step(spec: ProcessorSpec, chain: str, answer: str | None, rng: SeededRng) -> str:
    if spec.needs_answer and not (answer or "").strip():
        raise ProcessorError(f"{spec.name} requires the gold answer")

    if spec.kind == ProcessorKind.SHUFFLE:
        return shuffle(chain, spec.target, rng, spec.scheme)
    if spec.kind == ProcessorKind.MASK:
        return mask(chain, spec.target, answer, spec.mask_char)
    if spec.kind == ProcessorKind.REMOVE:
        return remove(chain, spec.target, answer)
    if spec.kind == ProcessorKind.RANDOMIZE:
        vocab = get_vocabulary(spec.vocabulary_id) if spec.vocabulary_id is not None else None
        return randomize(chain, spec.target, rng, vocab, spec.scheme)
    if spec.kind == ProcessorKind.INJECT_NOISE:
        return inject_noise(chain, answer or "", spec.k, rng, spec.noise_sentence)
    raise ProcessorError(f"unknown processor kind: {spec.kind}")


def step_rng(pipeline: TransformPipeline, record_id: str, step_index: int) -> SeededRng:
    spec = pipeline.steps[step_index]
    return SeededRng(mix(pipeline.run_seed, record_id, step_index, spec.seed_salt))


def apply_pipeline(pipeline: TransformPipeline, record: ReasoningRecord) -> str:
    """
    Применяет шаги пайплайна слева направо.

    Для [remove_alphabet, line_shuffle] сначала удаляются буквы, затем
    перемешиваются строки.

    Raises:
        PipelineStepError: Ошибка шага с его индексом
    """
    chain = record.chain
    for index, spec in enumerate(pipeline.steps):
        try:
            chain = apply_step(spec, chain, record.gold_answer, step_rng(pipeline, record.id, index))
        except CotProbeError as e:
            raise PipelineStepError(index, spec.name, e) from e
    return chain
