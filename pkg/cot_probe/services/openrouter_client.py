"""Client for OpenAI-compatible chat-completions endpoints (OpenRouter-style)."""

import asyncio
import logging
import random
import time
from typing import Any

import httpx

from cot_probe.config.settings import get_settings
from cot_probe.models.inference import InferenceParams, ModelResponse, ResponseStatus
from cot_probe.models.prompt import EvalPrompt
from cot_probe.services.backends import Backend, BackendConfigError, prompt_text

logger = logging.getLogger(__name__)


RETRY_STATUS = {500, 502, 503, 504}
REFUSAL_STATUS = {403}
REFUSAL_FINISH_REASONS = {"content_filter"}


class OpenRouterClient(Backend):
    """Client for a chat-completions endpoint with retries and bounded parallelism."""

    name = "live"

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str | None = None,
        max_parallel: int | None = None,
        transport: httpx.AsyncBaseTransport | None = None,
    ) -> None:
        """Initialize client; missing arguments come from settings."""
        settings = get_settings()
        self.api_key = api_key if api_key is not None else settings.openrouter_api_key
        self.base_url = (base_url or settings.openrouter_base_url).rstrip("/")
        self.max_parallel = max_parallel or settings.max_parallel
        self.read_timeout_sec = settings.read_timeout_sec
        self.backoff_base = 0.25
        self._transport = transport
        self._client: httpx.AsyncClient | None = None
        # Ограничение одновременных запросов на весь handle
        self._semaphore = asyncio.Semaphore(self.max_parallel)
        self.in_flight = 0
        self.peak_in_flight = 0

        if not self.api_key:
            raise BackendConfigError("OPENROUTER_API_KEY is not set")

    def _http(self, timeout: float) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(
                timeout=timeout,
                transport=self._transport,
                headers={
                    "Authorization": f"Bearer {self.api_key}",
                    "Content-Type": "application/json",
                },
            )
        return self._client

    async def aclose(self) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    async def complete(
        self,
        prompt: EvalPrompt | str,
        params: InferenceParams,
        *,
        sample_index: int = 0,
        reasoning: bool = False,
    ) -> ModelResponse:
        payload: dict[str, Any] = {
            "model": params.model_id,
            "messages": [{"role": "user", "content": prompt_text(prompt)}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        if reasoning:
            payload["include_reasoning"] = True

        async with self._semaphore:
            self.in_flight += 1
            self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                return await self._post_with_retries(
                    f"{self.base_url}/chat/completions", payload, params
                )
            finally:
                self.in_flight -= 1

    def _delay(self, attempts: int) -> float:
        return self.backoff_base * (2 ** (attempts - 1)) + random.random() * 0.1  # nosec B311

    async def _post_with_retries(
        self, url: str, payload: dict[str, Any], params: InferenceParams
    ) -> ModelResponse:
        """POST /chat/completions with exponential backoff on 429/5xx and transport errors."""
        timeout = params.timeout_sec or self.read_timeout_sec
        client = self._http(timeout)
        attempts = 0
        last_status = ResponseStatus.TRANSPORT_ERROR
        last_err = "failed"
        started = time.monotonic()

        while attempts < params.max_retries:
            attempts += 1
            try:
                resp = await client.post(url, json=payload, timeout=timeout)
                req_id = resp.headers.get("x-request-id")

                if resp.status_code == 200:
                    return self._parse_success(resp, attempts, time.monotonic() - started)

                if resp.status_code in REFUSAL_STATUS:
                    logger.warning(f"API {resp.status_code}: request refused, req_id={req_id}")
                    return ModelResponse.failed(
                        ResponseStatus.REFUSED, f"http {resp.status_code}", attempts
                    )

                # Ретраим 429 и 5xx
                if resp.status_code in RETRY_STATUS or resp.status_code == 429:
                    last_status = ResponseStatus.TRANSPORT_ERROR
                    last_err = f"http {resp.status_code}"
                    if attempts < params.max_retries:
                        delay = self._delay(attempts)
                        logger.warning(
                            f"API {resp.status_code}, attempt {attempts}/{params.max_retries}, "
                            f"sleep {delay:.2f}s, req_id={req_id}"
                        )
                        await self._sleep(delay)
                    continue

                # Неретрайные 4xx и неожиданные коды - сразу выходим
                logger.error(f"API {resp.status_code}: {resp.text[:200]} req_id={req_id}")
                return ModelResponse.failed(
                    ResponseStatus.TRANSPORT_ERROR, f"http {resp.status_code}", attempts
                )

            except httpx.TimeoutException:
                last_status = ResponseStatus.TIMEOUT
                last_err = "timeout"
                logger.warning(f"Timeout, attempt {attempts}/{params.max_retries}")
            except httpx.RequestError as e:
                last_status = ResponseStatus.TRANSPORT_ERROR
                last_err = f"request_error: {e}"
                logger.warning(f"Request error, attempt {attempts}/{params.max_retries}: {e}")

            if attempts < params.max_retries:
                await self._sleep(self._delay(attempts))

        logger.error(f"Giving up after {attempts} attempts: {last_err}")
        return ModelResponse.failed(last_status, last_err, attempts)

    def _parse_success(
        self, resp: httpx.Response, attempts: int, latency: float
    ) -> ModelResponse:
        try:
            data = resp.json()
            choice = data["choices"][0]
            message = choice.get("message") or {}
        except (ValueError, KeyError, IndexError, TypeError) as e:
            logger.error(f"Malformed completion body: {e}")
            return ModelResponse.failed(
                ResponseStatus.TRANSPORT_ERROR, f"malformed body: {e}", attempts
            )

        usage = data.get("usage")
        if isinstance(usage, dict):
            usage = {k: v for k, v in usage.items() if isinstance(v, int)}
        else:
            usage = None

        if message.get("refusal") or choice.get("finish_reason") in REFUSAL_FINISH_REASONS:
            logger.warning("Completion refused by the provider")
            return ModelResponse(
                status=ResponseStatus.REFUSED,
                error=str(message.get("refusal") or choice.get("finish_reason")),
                usage=usage,
                latency_sec=latency,
                attempts=attempts,
            )

        text = message.get("content") or ""
        logger.debug(f"Completion ok ({len(text)} chars) after {attempts} attempt(s)")
        return ModelResponse(
            text=text,
            status=ResponseStatus.OK,
            usage=usage,
            latency_sec=latency,
            attempts=attempts,
            reasoning=message.get("reasoning"),
        )

    async def _sleep(self, seconds: float) -> None:
        # Отдельный метод, мокается в тестах
        await asyncio.sleep(seconds)
