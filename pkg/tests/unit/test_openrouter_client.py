"""Tests for the chat-completions client."""

import json
from collections.abc import Callable
from unittest.mock import AsyncMock, patch

import httpx
import pytest

from cot_probe.models.inference import InferenceParams, ResponseStatus
from cot_probe.services.backends import BackendConfigError
from cot_probe.services.openrouter_client import OpenRouterClient

PARAMS = InferenceParams(model_id="test/model", max_retries=3)


def _completion(content: str | None = "70", **extra: object) -> dict[str, object]:
    message: dict[str, object] = {"role": "assistant", "content": content, **extra}
    return {
        "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 1, "cost": 0.5},
    }


def _client(handler: Callable[[httpx.Request], httpx.Response]) -> OpenRouterClient:
    return OpenRouterClient(
        api_key="test-key",
        base_url="https://example.test/api/v1/",
        max_parallel=2,
        transport=httpx.MockTransport(handler),
    )


class TestOpenRouterClient:
    """Tests for OpenRouterClient."""

    def test_missing_key(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that a missing credential is a configuration error."""
        monkeypatch.delenv("OPENROUTER_API_KEY", raising=False)
        with pytest.raises(BackendConfigError):
            OpenRouterClient()

    def test_key_from_environment(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that the key and parallelism come from settings."""
        monkeypatch.setenv("OPENROUTER_API_KEY", "env-key")
        monkeypatch.setenv("COT_PROBE_MAX_PARALLEL", "3")
        client = OpenRouterClient()
        assert client.api_key == "env-key"
        assert client.max_parallel == 3

    @pytest.mark.asyncio
    async def test_read_timeout_from_settings(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that requests without a timeout use COT_PROBE_READ_TIMEOUT_SEC."""
        monkeypatch.setenv("COT_PROBE_READ_TIMEOUT_SEC", "7")
        timeouts: list[float] = []

        def handler(request: httpx.Request) -> httpx.Response:
            timeouts.append(request.extensions["timeout"]["read"])
            return httpx.Response(200, json=_completion("70"))

        client = _client(handler)
        await client.complete("q", PARAMS)
        await client.complete("q", PARAMS.model_copy(update={"timeout_sec": 2.0}))
        await client.aclose()
        assert timeouts == [7.0, 2.0]

    @pytest.mark.asyncio
    async def test_success_payload(self) -> None:
        """Test the wire format of a successful request."""
        seen: list[httpx.Request] = []

        def handler(request: httpx.Request) -> httpx.Response:
            seen.append(request)
            return httpx.Response(200, json=_completion("70"))

        client = _client(handler)
        response = await client.complete("Thus, the answer is", PARAMS)
        await client.aclose()

        assert response.status == ResponseStatus.OK
        assert response.text == "70"
        assert response.usage == {"prompt_tokens": 10, "completion_tokens": 1}
        assert str(seen[0].url) == "https://example.test/api/v1/chat/completions"
        assert seen[0].headers["Authorization"] == "Bearer test-key"
        body = json.loads(seen[0].content)
        assert body["model"] == "test/model"
        assert body["messages"] == [{"role": "user", "content": "Thus, the answer is"}]
        assert body["temperature"] == 0.5
        assert body["max_tokens"] == 5000
        assert "include_reasoning" not in body

    @pytest.mark.asyncio
    async def test_reasoning_requested(self) -> None:
        """Test that reasoning is requested and captured."""
        def handler(request: httpx.Request) -> httpx.Response:
            assert json.loads(request.content)["include_reasoning"] is True
            return httpx.Response(200, json=_completion("70", reasoning="b = 21 or 49"))

        client = _client(handler)
        response = await client.complete("q", PARAMS, reasoning=True)
        assert response.reasoning == "b = 21 or 49"

    @pytest.mark.asyncio
    async def test_retries_429_then_succeeds(self) -> None:
        """Test exponential backoff on 429."""
        statuses = iter([429, 429, 200])

        def handler(request: httpx.Request) -> httpx.Response:
            code = next(statuses)
            return httpx.Response(code, json=_completion() if code == 200 else {})

        client = _client(handler)
        with patch.object(client, "_sleep", new=AsyncMock()) as mock_sleep:
            response = await client.complete("q", PARAMS)

        assert response.status == ResponseStatus.OK
        assert response.attempts == 3
        assert mock_sleep.await_count == 2
        first, second = (call.args[0] for call in mock_sleep.await_args_list)
        assert 0.25 <= first < 0.35
        assert 0.5 <= second < 0.6

    @pytest.mark.asyncio
    async def test_gives_up_after_retries(self) -> None:
        """Test transport_error after the retry budget."""
        client = _client(lambda request: httpx.Response(503))
        with patch.object(client, "_sleep", new=AsyncMock()):
            response = await client.complete("q", PARAMS)

        assert response.status == ResponseStatus.TRANSPORT_ERROR
        assert response.text is None
        assert response.attempts == 3

    @pytest.mark.asyncio
    async def test_timeout_status(self) -> None:
        """Test that repeated timeouts map to the timeout status."""
        def handler(request: httpx.Request) -> httpx.Response:
            raise httpx.ReadTimeout("slow", request=request)

        client = _client(handler)
        with patch.object(client, "_sleep", new=AsyncMock()):
            response = await client.complete("q", PARAMS)
        assert response.status == ResponseStatus.TIMEOUT

    @pytest.mark.asyncio
    async def test_forbidden_is_refusal(self) -> None:
        """Test that 403 is a refusal without retries."""
        calls = []

        def handler(request: httpx.Request) -> httpx.Response:
            calls.append(request)
            return httpx.Response(403, json={"error": "moderation"})

        client = _client(handler)
        response = await client.complete("q", PARAMS)
        assert response.status == ResponseStatus.REFUSED
        assert len(calls) == 1

    @pytest.mark.asyncio
    async def test_content_filter_is_refusal(self) -> None:
        """Test that a content-filter finish reason is a refusal."""
        body = _completion(None)
        body["choices"][0]["finish_reason"] = "content_filter"  # type: ignore[index]
        client = _client(lambda request: httpx.Response(200, json=body))
        response = await client.complete("q", PARAMS)
        assert response.status == ResponseStatus.REFUSED

    @pytest.mark.asyncio
    async def test_bad_request_not_retried(self) -> None:
        """Test that other 4xx codes fail immediately."""
        client = _client(lambda request: httpx.Response(400, text="bad"))
        with patch.object(client, "_sleep", new=AsyncMock()) as mock_sleep:
            response = await client.complete("q", PARAMS)
        assert response.status == ResponseStatus.TRANSPORT_ERROR
        assert response.attempts == 1
        mock_sleep.assert_not_awaited()

    @pytest.mark.asyncio
    async def test_malformed_body(self) -> None:
        """Test that a 200 without choices is a transport error."""
        client = _client(lambda request: httpx.Response(200, json={"nothing": True}))
        response = await client.complete("q", PARAMS)
        assert response.status == ResponseStatus.TRANSPORT_ERROR
