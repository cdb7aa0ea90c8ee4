"""Tests for archives and the replay / recording backends."""

import json
from pathlib import Path
from unittest.mock import AsyncMock

import pytest

from cot_probe.models.inference import InferenceParams, ModelResponse, ResponseStatus
from cot_probe.models.records import Benchmark, QuestionItem
from cot_probe.models.verdict import JudgeMethod, Verdict, VerdictEntry
from cot_probe.services.archive import ResponseArchive, VerdictArchive, request_key
from cot_probe.services.backends import (
    NO_FIXTURE,
    BackendError,
    RecordingBackend,
    ReplayBackend,
    collect_chain,
    collect_records,
)

PARAMS = InferenceParams()


def _ok(text: str, reasoning: str | None = None) -> ModelResponse:
    return ModelResponse(text=text, status=ResponseStatus.OK, reasoning=reasoning)


class TestRequestKey:
    """Tests for request keys."""

    def test_key_depends_on_inputs(self) -> None:
        """Test that prompt, params and sample index all change the key."""
        base = request_key("p", PARAMS, 0)
        assert base == request_key("p", PARAMS, 0)
        assert base != request_key("p2", PARAMS, 0)
        assert base != request_key("p", PARAMS, 1)
        assert base != request_key("p", PARAMS.model_copy(update={"temperature": 0.0}), 0)

    def test_key_ignores_transport_settings(self) -> None:
        """Test that retries and timeouts do not change the key."""
        other = PARAMS.model_copy(update={"max_retries": 9, "timeout_sec": 5.0})
        assert request_key("p", PARAMS) == request_key("p", other)


class TestResponseArchive:
    """Tests for ResponseArchive."""

    @pytest.mark.asyncio
    async def test_append_and_reload(self, tmp_path: Path) -> None:
        """Test that appended entries survive a reload."""
        path = tmp_path / "responses.jsonl"
        archive = await ResponseArchive.open(path)
        assert await archive.append("k1", "prompt", PARAMS, _ok("70"))

        reloaded = await ResponseArchive.open(path)
        assert "k1" in reloaded
        assert reloaded.get("k1") == _ok("70")
        entry = json.loads(path.read_text(encoding="utf-8"))
        assert set(entry) == {"key", "prompt", "params", "response", "status", "timestamp"}

    @pytest.mark.asyncio
    async def test_monotonic(self, tmp_path: Path) -> None:
        """Test that an existing key is never rewritten."""
        path = tmp_path / "responses.jsonl"
        archive = await ResponseArchive.open(path)
        await archive.append("k1", "prompt", PARAMS, _ok("70"))
        assert not await archive.append("k1", "prompt", PARAMS, _ok("71"))
        assert archive.get("k1").text == "70"  # type: ignore[union-attr]
        assert len(path.read_text(encoding="utf-8").splitlines()) == 1

    @pytest.mark.asyncio
    async def test_skips_truncated_line(self, tmp_path: Path) -> None:
        """Test that a torn last line is skipped on load."""
        path = tmp_path / "responses.jsonl"
        archive = await ResponseArchive.open(path)
        await archive.append("k1", "prompt", PARAMS, _ok("70"))
        with path.open("a", encoding="utf-8") as f:
            f.write('{"key": "k2", "stat')

        reloaded = await ResponseArchive.open(path)
        assert len(reloaded) == 1

    @pytest.mark.asyncio
    async def test_read_only(self, tmp_path: Path) -> None:
        """Test that a read-only archive does not write."""
        archive = ResponseArchive(tmp_path / "r.jsonl", writable=False)
        assert not await archive.append("k", "p", PARAMS, _ok("1"))
        assert not (tmp_path / "r.jsonl").exists()


class TestVerdictArchive:
    """Tests for VerdictArchive."""

    @pytest.mark.asyncio
    async def test_for_cell_sorted(self, tmp_path: Path) -> None:
        """Test that cell entries come back sorted by record id."""
        path = tmp_path / "verdicts.jsonl"
        archive = await VerdictArchive.open(path)
        verdict = Verdict(correct=True, extracted="70", method=JudgeMethod.NUMERIC)
        for rid in ("b", "a", "c"):
            await archive.append(
                VerdictEntry(cell="c1", record_id=rid, status=ResponseStatus.OK, verdict=verdict)
            )
        await archive.append(
            VerdictEntry(cell="c2", record_id="a", status=ResponseStatus.TIMEOUT)
        )
        assert not await archive.append(
            VerdictEntry(cell="c1", record_id="a", status=ResponseStatus.TIMEOUT)
        )

        reloaded = await VerdictArchive.open(path)
        assert [e.record_id for e in reloaded.for_cell("c1")] == ["a", "b", "c"]
        assert reloaded.has("c2", "a")
        assert not reloaded.has("c2", "b")
        assert len(reloaded) == 4


class TestReplayBackend:
    """Tests for ReplayBackend and RecordingBackend."""

    @pytest.mark.asyncio
    async def test_replay_hit_and_miss(self, tmp_path: Path) -> None:
        """Test that replay serves archived keys and misses as transport errors."""
        archive = await ResponseArchive.open(tmp_path / "r.jsonl")
        await archive.append(request_key("known", PARAMS), "known", PARAMS, _ok("70"))
        backend = ReplayBackend(archive)

        assert (await backend.complete("known", PARAMS)).text == "70"
        miss = await backend.complete("unknown", PARAMS)
        assert miss.status == ResponseStatus.TRANSPORT_ERROR
        assert miss.error == NO_FIXTURE

    @pytest.mark.asyncio
    async def test_recording_caches_completed_responses(self, tmp_path: Path) -> None:
        """Test that ok and refused responses are archived and served again, timeouts are not."""
        inner = AsyncMock()
        inner.name = "fake"
        inner.complete = AsyncMock(
            side_effect=[
                _ok("70"),
                ModelResponse.failed(ResponseStatus.TIMEOUT, "timeout"),
                ModelResponse.failed(ResponseStatus.REFUSED, "http 403"),
            ]
        )
        archive = await ResponseArchive.open(tmp_path / "r.jsonl")
        backend = RecordingBackend(inner, archive)

        assert (await backend.complete("p1", PARAMS)).text == "70"
        assert (await backend.complete("p1", PARAMS)).text == "70"
        assert (await backend.complete("p2", PARAMS)).status == ResponseStatus.TIMEOUT
        assert (await backend.complete("p3", PARAMS)).status == ResponseStatus.REFUSED
        assert (await backend.complete("p3", PARAMS)).status == ResponseStatus.REFUSED

        assert inner.complete.await_count == 3
        assert len(archive) == 2


class TestCollect:
    """Tests for chain collection."""

    @pytest.mark.asyncio
    async def test_collect_chain_prefers_reasoning(self) -> None:
        """Test that the reasoning field is used as the chain when present."""
        backend = AsyncMock()
        backend.complete = AsyncMock(return_value=_ok("70", reasoning="b = 21 or 49 ..."))
        assert await collect_chain("q", PARAMS, backend) == "b = 21 or 49 ..."

    @pytest.mark.asyncio
    async def test_collect_chain_refusal(self) -> None:
        """Test that a refusal raises BackendError."""
        backend = AsyncMock()
        backend.complete = AsyncMock(
            return_value=ModelResponse.failed(ResponseStatus.REFUSED, "http 403")
        )
        with pytest.raises(BackendError):
            await collect_chain("q", PARAMS, backend)

    @pytest.mark.asyncio
    async def test_collect_records_samples(self) -> None:
        """Test that each question yields one record per sample."""
        backend = AsyncMock()
        backend.complete = AsyncMock(return_value=_ok("chain text"))
        questions = [
            QuestionItem(id=f"q{i}", benchmark=Benchmark.MATH_INTEGER, question="?", gold_answer="7")
            for i in range(3)
        ]
        records = await collect_records(questions, PARAMS, backend, samples=10, parallel=4)

        assert len(records) == 30
        assert records[0].id == "q0#0"
        assert records[-1].id == "q2#9"
        assert {r.sample_index for r in records} == set(range(10))
