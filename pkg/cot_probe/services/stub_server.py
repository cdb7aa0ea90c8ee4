"""Local OpenAI-compatible stub endpoint with a scripted status sequence."""

import logging
from collections.abc import Sequence
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse

logger = logging.getLogger(__name__)


class StubServer:
    """Класс для управления stub-приложением."""

    def __init__(
        self,
        script: Sequence[int] = (200,),
        reply: str = "70",
        reasoning: str | None = None,
        api_key: str | None = None,
    ) -> None:
        """
        Инициализация приложения.

        Args:
            script: Коды ответа по порядку запросов; последний повторяется
            reply: Текст ответа модели при 200
            reasoning: Необязательная цепочка рассуждений в ответе
            api_key: Если задан, проверяется Bearer-токен
        """
        if not script:
            raise ValueError("script must contain at least one status code")
        self.script = list(script)
        self.reply = reply
        self.reasoning = reasoning
        self.api_key = api_key
        self.requests: list[dict[str, Any]] = []

        self.app = FastAPI(
            title="cot-probe stub endpoint",
            description="Scripted chat-completions endpoint for offline tests",
            version="0.1.0",
        )
        self._setup_routes()

    def _next_status(self) -> int:
        index = min(len(self.requests) - 1, len(self.script) - 1)
        return self.script[index]

    def _setup_routes(self) -> None:
        """Настраивает маршруты FastAPI."""

        @self.app.get("/")  # type: ignore[misc]
        async def health_check() -> dict[str, str]:
            """Health check endpoint."""
            return {"status": "ok", "message": "stub endpoint is running"}

        @self.app.post("/v1/chat/completions")  # type: ignore[misc]
        @self.app.post("/chat/completions")  # type: ignore[misc]
        async def chat_completions(
            request: Request, authorization: str | None = Header(None)
        ) -> JSONResponse:
            if self.api_key is not None and authorization != f"Bearer {self.api_key}":
                raise HTTPException(status_code=401, detail="Invalid API key")

            payload = await request.json()
            self.requests.append(payload)
            status = self._next_status()
            logger.info(f"Stub request #{len(self.requests)} -> {status}")

            if status != 200:
                return JSONResponse(
                    status_code=status, content={"error": {"code": status, "message": "scripted"}}
                )

            message: dict[str, Any] = {"role": "assistant", "content": self.reply}
            if self.reasoning is not None and payload.get("include_reasoning"):
                message["reasoning"] = self.reasoning
            return JSONResponse(
                content={
                    "id": f"stub-{len(self.requests)}",
                    "object": "chat.completion",
                    "model": payload.get("model", "stub"),
                    "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
                    "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
                }
            )

    def get_app(self) -> FastAPI:
        """Возвращает FastAPI приложение."""
        return self.app


def parse_script(text: str) -> list[int]:
    """Parse a comma-separated status script such as "429,429,200"."""
    try:
        codes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"invalid status script: {text!r}")
    if not codes:
        raise ValueError("status script is empty")
    return codes
