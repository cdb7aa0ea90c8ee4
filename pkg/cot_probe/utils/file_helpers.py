"""File helpers: JSONL reading/appending and atomic text writes."""

import json
import logging
import os
import tempfile
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import aiofiles

from cot_probe.utils.errors import CotProbeError

logger = logging.getLogger(__name__)


class MalformedLineError(CotProbeError):
    """Строка JSONL не разбирается."""

    def __init__(self, path: Path, line_no: int, reason: str) -> None:
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


async def read_jsonl(path: Path, strict: bool = False) -> list[tuple[int, dict[str, Any]]]:
    """
    Читает JSONL-файл.

    Args:
        path: Путь к файлу
        strict: Бросать ошибку на битой строке вместо пропуска

    Returns:
        Пары (номер строки с 1, объект); пустые строки пропускаются

    Raises:
        MalformedLineError: Битая строка при strict=True
    """
    rows: list[tuple[int, dict[str, Any]]] = []
    async with aiofiles.open(path, "r", encoding="utf-8") as f:
        line_no = 0
        async for line in f:
            line_no += 1
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("expected a JSON object")
            except ValueError as e:
                if strict:
                    raise MalformedLineError(path, line_no, str(e))
                # Недописанная строка после прерванного запуска
                logger.warning(f"Skipping malformed line {line_no} in {path}: {e}")
                continue
            rows.append((line_no, obj))
    return rows


async def append_jsonl(path: Path, rows: Iterable[dict[str, Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(path, "a", encoding="utf-8") as f:
        for row in rows:
            await f.write(json.dumps(row, ensure_ascii=False) + "\n")


async def write_text_atomic(path: Path, content: str) -> None:
    """Пишет файл через временный файл и os.replace."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    tmp_path = Path(tmp_name)
    try:
        async with aiofiles.open(tmp_path, "w", encoding="utf-8", newline="") as f:
            await f.write(content)
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def create_preview(text: str, max_length: int = 500) -> str:
    """
    Создаёт превью текста для вывода в консоль.

    Args:
        text: Полный текст
        max_length: Максимальная длина превью

    Returns:
        Обрезанный текст с многоточием если нужно
    """
    if len(text) <= max_length:
        return text

    # Обрезаем по словам, а не по символам
    words = text[:max_length].split()
    if len(" ".join(words)) >= max_length:
        words = words[:-1]

    return " ".join(words) + "..."
