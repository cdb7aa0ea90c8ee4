"""Model-free answer extractors usable as an inference backend."""

import logging
from collections import Counter
from dataclasses import dataclass

from cot_probe.models.extractor import ExtractorKind, ExtractorStrategy
from cot_probe.models.inference import InferenceParams, ModelResponse, ResponseStatus
from cot_probe.models.prompt import EvalPrompt
from cot_probe.services.backends import Backend
from cot_probe.utils.segmentation import (
    canonical_number,
    digit_runs,
    number_sort_key,
    number_value,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Extraction:
    text: str | None
    note: str = ""

    @property
    def value(self) -> int | None:
        return None if self.text is None else number_value(self.text)


def _run_values(text: str, start: int = 0) -> list[str]:
    return [canonical_number(text[s:e]) for s, e in digit_runs(text) if s >= start]


def _last_anchor_end(chain: str, anchors: tuple[str, ...]) -> int | None:
    lowered = chain.lower()
    best: tuple[int, int] | None = None
    for anchor in anchors:
        anchor = anchor.strip().lower()
        if not anchor:
            continue
        pos = lowered.rfind(anchor)
        if pos != -1 and (best is None or pos > best[0]):
            best = (pos, pos + len(anchor))
    return best[1] if best else None


def explain(chain: str, strategy: ExtractorStrategy) -> Extraction:
    """
    Извлекает ответ из цепочки без модели.

    Args:
        chain: Преобразованная цепочка
        strategy: Стратегия извлечения

    Returns:
        Нормализованная запись числа (или None) и пояснение для ничьих
    """
    if strategy.kind == ExtractorKind.LAST_NUMBER:
        values = _run_values(chain)
        return Extraction(values[-1] if values else None)

    if strategy.kind == ExtractorKind.MOST_FREQUENT_NUMBER:
        counts = Counter(_run_values(chain))
        if not counts:
            return Extraction(None)
        top = max(counts.values())
        modal = sorted((v for v, c in counts.items() if c == top), key=number_sort_key)
        # Ничья: берём наименьшее значение
        shown = ", ".join(v if len(v) <= 12 else f"{v[:12]}..." for v in modal)
        note = f"tie between {shown} at count {top}" if len(modal) > 1 else ""
        return Extraction(modal[0], note)

    if strategy.kind == ExtractorKind.AFTER_ANCHOR:
        end = _last_anchor_end(chain, strategy.anchors)
        if end is None:
            return Extraction(None, "no anchor")
        values = _run_values(chain, end)
        return Extraction(values[0] if values else None)

    raise ValueError(f"unknown extractor kind: {strategy.kind}")


def extract(chain: str, strategy: ExtractorStrategy) -> int | None:
    """Числа длиннее MAX_INT_DIGITS цифр дают None."""
    return explain(chain, strategy).value


class SurrogateBackend(Backend):
    """Answers from the (transformed) chain of the prompt; no inference."""

    def __init__(self, strategy: ExtractorStrategy) -> None:
        self.strategy = strategy
        self.name = f"surrogate:{strategy.kind.value}"

    async def complete(
        self,
        prompt: EvalPrompt | str,
        params: InferenceParams,
        *,
        sample_index: int = 0,
        reasoning: bool = False,
    ) -> ModelResponse:
        if isinstance(prompt, EvalPrompt):
            chain = prompt.chain or ""
        else:
            chain = prompt
        result = explain(chain, self.strategy)
        if result.note:
            logger.debug(f"{self.name}: {result.note}")
        text = result.text or ""
        return ModelResponse(text=text, status=ResponseStatus.OK)
