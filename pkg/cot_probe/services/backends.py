"""Inference backend protocol, replay/recording backends and chain collection."""

import asyncio
import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence

from cot_probe.models.inference import InferenceParams, ModelResponse, ResponseStatus
from cot_probe.models.prompt import EvalPrompt
from cot_probe.models.records import QuestionItem, ReasoningRecord
from cot_probe.services.archive import ResponseArchive, request_key
from cot_probe.utils.errors import CotProbeError

logger = logging.getLogger(__name__)

NO_FIXTURE = "no fixture"


class BackendError(CotProbeError):
    """Бэкенд не вернул пригодный ответ."""

    pass


class BackendConfigError(BackendError):
    """Бэкенд не сконфигурирован (нет ключа, архива и т.п.)."""

    pass


def prompt_text(prompt: EvalPrompt | str) -> str:
    return prompt.text if isinstance(prompt, EvalPrompt) else prompt


class Backend(ABC):
    """Shareable completion handle."""

    name: str = "backend"

    @abstractmethod
    async def complete(
        self,
        prompt: EvalPrompt | str,
        params: InferenceParams,
        *,
        sample_index: int = 0,
        reasoning: bool = False,
    ) -> ModelResponse:
        """Return a response; transport failures are reported in the status, not raised."""

    async def aclose(self) -> None:
        return None


class ReplayBackend(Backend):
    """Answers only from an archive; unknown prompts are transport errors."""

    name = "replay"

    def __init__(self, archive: ResponseArchive) -> None:
        self.archive = archive

    async def complete(
        self,
        prompt: EvalPrompt | str,
        params: InferenceParams,
        *,
        sample_index: int = 0,
        reasoning: bool = False,
    ) -> ModelResponse:
        key = request_key(prompt_text(prompt), params, sample_index)
        response = self.archive.get(key)
        if response is None:
            logger.debug(f"Replay miss for key {key[:12]}")
            return ModelResponse.failed(ResponseStatus.TRANSPORT_ERROR, NO_FIXTURE)
        return response


class RecordingBackend(Backend):
    """Serves archived responses and records new completed ones."""

    def __init__(self, inner: Backend, archive: ResponseArchive) -> None:
        self.inner = inner
        self.archive = archive
        self.name = f"recording:{inner.name}"

    async def complete(
        self,
        prompt: EvalPrompt | str,
        params: InferenceParams,
        *,
        sample_index: int = 0,
        reasoning: bool = False,
    ) -> ModelResponse:
        text = prompt_text(prompt)
        key = request_key(text, params, sample_index)
        cached = self.archive.get(key)
        if cached is not None:
            return cached

        response = await self.inner.complete(
            prompt, params, sample_index=sample_index, reasoning=reasoning
        )
        # Архивируются ответы ok и refused, сбои транспорта перезапрашиваются
        if response.status in (ResponseStatus.OK, ResponseStatus.REFUSED):
            await self.archive.append(key, text, params, response)
        return response

    async def aclose(self) -> None:
        await self.inner.aclose()


def chain_from_response(response: ModelResponse) -> str:
    if response.reasoning and response.reasoning.strip():
        return response.reasoning
    return response.text or ""


async def collect_chain(
    question: str,
    params: InferenceParams,
    backend: Backend,
    sample_index: int = 0,
) -> str:
    """
    Stage 1: получает цепочку рассуждений модели для вопроса.

    Args:
        question: Текст вопроса
        params: Параметры инференса
        backend: Бэкенд
        sample_index: Номер независимого сэмпла

    Returns:
        Текст цепочки

    Raises:
        BackendError: Отказ модели или сбой транспорта
    """
    response = await backend.complete(
        question, params, sample_index=sample_index, reasoning=True
    )
    if response.status != ResponseStatus.OK:
        raise BackendError(
            f"chain collection failed ({response.status.value}): {response.error or ''}".strip()
        )
    return chain_from_response(response)


async def collect_records(
    questions: Sequence[QuestionItem],
    params: InferenceParams,
    backend: Backend,
    samples: int = 10,
    parallel: int = 8,
) -> list[ReasoningRecord]:
    """Collect `samples` independent chains per question; failures are dropped."""
    semaphore = asyncio.Semaphore(parallel)

    async def one(item: QuestionItem, index: int) -> ReasoningRecord | None:
        async with semaphore:
            try:
                chain = await collect_chain(item.question, params, backend, index)
            except BackendError as e:
                logger.warning(f"Skipping {item.id} sample {index}: {e}")
                return None
        return ReasoningRecord(
            id=f"{item.id}#{index}",
            benchmark=item.benchmark,
            question=item.question,
            chain=chain,
            gold_answer=item.gold_answer,
            generator=params.model_id,
            sample_index=index,
        )

    results = await asyncio.gather(
        *(one(item, index) for item in questions for index in range(samples))
    )
    records = [r for r in results if r is not None]
    logger.info(f"Collected {len(records)} of {len(results)} chains")
    return records
