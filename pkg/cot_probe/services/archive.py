"""Append-only JSONL archives for responses and verdicts."""

import asyncio
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from cot_probe.models.inference import InferenceParams, ModelResponse, ResponseStatus
from cot_probe.models.verdict import VerdictEntry
from cot_probe.utils.file_helpers import append_jsonl, read_jsonl

logger = logging.getLogger(__name__)


def request_key(prompt: str, params: InferenceParams, sample_index: int = 0) -> str:
    """Hash of (rendered prompt, params, model id, sample index)."""
    payload = {
        "prompt": prompt,
        "params": params.archive_view(),
        "sample_index": sample_index,
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ResponseArchive:
    """
    Архив ответов: JSONL из {key, prompt, params, response, status, timestamp}.

    Существующие записи никогда не перезаписываются.
    """

    def __init__(self, path: Path, writable: bool = True) -> None:
        self.path = path
        self.writable = writable
        self._entries: dict[str, ModelResponse] = {}
        self._lock = asyncio.Lock()

    @classmethod
    async def open(cls, path: Path, writable: bool = True) -> "ResponseArchive":
        archive = cls(path, writable)
        await archive.load()
        return archive

    async def load(self) -> None:
        if not self.path.exists():
            return
        for line_no, entry in await read_jsonl(self.path, strict=False):
            try:
                key = entry["key"]
                body = entry.get("response") or {}
                self._entries.setdefault(
                    key,
                    ModelResponse(
                        text=body.get("text"),
                        status=ResponseStatus(entry["status"]),
                        usage=body.get("usage"),
                        latency_sec=body.get("latency_sec", 0.0),
                        attempts=body.get("attempts", 1),
                        reasoning=body.get("reasoning"),
                        error=body.get("error"),
                    ),
                )
            except (KeyError, ValueError) as e:
                logger.warning(f"Skipping malformed archive line {line_no} in {self.path}: {e}")
        logger.info(f"Loaded {len(self._entries)} archived responses from {self.path}")

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> ModelResponse | None:
        return self._entries.get(key)

    async def append(
        self, key: str, prompt: str, params: InferenceParams, response: ModelResponse
    ) -> bool:
        """Записывает ответ, если ключа ещё нет. Возвращает True при записи."""
        if not self.writable:
            return False
        async with self._lock:
            if key in self._entries:
                return False
            entry: dict[str, Any] = {
                "key": key,
                "prompt": prompt,
                "params": params.archive_view(),
                "response": response.model_dump(exclude={"status"}, mode="json"),
                "status": response.status.value,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
            await append_jsonl(self.path, [entry])
            self._entries[key] = response
            return True


class VerdictArchive:
    """Append-only verdict log keyed by (cell, record id)."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self._entries: dict[tuple[str, str], VerdictEntry] = {}
        self._lock = asyncio.Lock()

    @classmethod
    async def open(cls, path: Path) -> "VerdictArchive":
        archive = cls(path)
        if path.exists():
            for line_no, row in await read_jsonl(path, strict=False):
                try:
                    entry = VerdictEntry.model_validate(row)
                except ValueError as e:
                    logger.warning(f"Skipping malformed verdict line {line_no}: {e}")
                    continue
                archive._entries.setdefault((entry.cell, entry.record_id), entry)
        return archive

    def __len__(self) -> int:
        return len(self._entries)

    def has(self, cell: str, record_id: str) -> bool:
        return (cell, record_id) in self._entries

    def for_cell(self, cell: str) -> list[VerdictEntry]:
        """Entries of one cell sorted by record id."""
        return sorted(
            (e for (c, _), e in self._entries.items() if c == cell),
            key=lambda e: e.record_id,
        )

    async def append(self, entry: VerdictEntry) -> bool:
        async with self._lock:
            key = (entry.cell, entry.record_id)
            if key in self._entries:
                return False
            await append_jsonl(self.path, [entry.model_dump(mode="json")])
            self._entries[key] = entry
            return True
