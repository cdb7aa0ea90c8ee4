"""Pytest configuration and fixtures."""

from collections.abc import Callable, Iterator
from pathlib import Path

import pytest

from cot_probe.config.settings import reset_settings
from cot_probe.models.records import Benchmark, ReasoningRecord
from tests.factories import (
    BASES_CHAIN,
    BASES_QUESTION,
    anchored_records,
    random_chain,
    write_records,
)


@pytest.fixture(autouse=True)
def _fresh_settings() -> Iterator[None]:
    """Settings are re-read from the environment in every test."""
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def bases_record() -> ReasoningRecord:
    """The integer-bases chain as a math record with gold answer 70."""
    return ReasoningRecord(
        id="aime25-q1#0",
        benchmark=Benchmark.MATH_INTEGER,
        question=BASES_QUESTION,
        chain=BASES_CHAIN,
        gold_answer="70",
        generator="openai/gpt-oss-120b",
    )


@pytest.fixture
def chain_factory() -> Callable[..., str]:
    """Random chains with words, numbers, symbols and non-ASCII letters."""
    return random_chain


@pytest.fixture
def anchored() -> list[ReasoningRecord]:
    """Ten records whose chains end with "Thus the answer is <gold>"."""
    return anchored_records()


@pytest.fixture
def dataset_path(tmp_path: Path, anchored: list[ReasoningRecord]) -> Path:
    """The anchored records written as a JSONL dataset."""
    return write_records(tmp_path / "records.jsonl", anchored)
