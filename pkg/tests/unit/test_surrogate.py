"""Tests for model-free answer extractors."""

import random

import pytest
from pydantic import ValidationError

from cot_probe.models.extractor import ExtractorKind, ExtractorStrategy
from cot_probe.models.inference import InferenceParams, ResponseStatus
from cot_probe.models.records import Benchmark, ReasoningRecord
from cot_probe.services.pipeline import parse_pipeline
from cot_probe.services.processors import apply_pipeline
from cot_probe.services.surrogate import SurrogateBackend, explain, extract
from tests.factories import random_chain

LAST = ExtractorStrategy(kind=ExtractorKind.LAST_NUMBER)
FREQUENT = ExtractorStrategy(kind=ExtractorKind.MOST_FREQUENT_NUMBER)
ANCHOR = ExtractorStrategy(kind=ExtractorKind.AFTER_ANCHOR)


def _frequency_records(count: int = 50) -> list[ReasoningRecord]:
    records = []
    for i in range(count):
        gold = 200 + 7 * i
        chain = "\n".join(
            [
                f"Start from {i + 1} and compute {gold}.",
                f"Double {gold} is {2 * gold}.",
                f"Thus the answer is {gold}",
            ]
        )
        records.append(
            ReasoningRecord(
                id=f"f{i:02d}#0",
                benchmark=Benchmark.MATH_INTEGER,
                question="?",
                chain=chain,
                gold_answer=str(gold),
            )
        )
    return records


def _hits(records: list[ReasoningRecord], dsl: str, strategy: ExtractorStrategy) -> int:
    pipeline = parse_pipeline(dsl, run_seed=7)
    return sum(
        extract(apply_pipeline(pipeline, r), strategy) == int(r.gold_answer) for r in records
    )


class TestStrategies:
    """Tests for the extraction strategies."""

    def test_bases_chain(self, bases_record: ReasoningRecord) -> None:
        """Test the three strategies on the integer-bases chain."""
        chain = bases_record.chain
        assert extract(chain, LAST) == 70
        assert extract(chain, FREQUENT) == 7
        assert extract(chain, ANCHOR) == 70

    def test_no_digits(self) -> None:
        """Test that chains without digits yield no answer."""
        for strategy in (LAST, FREQUENT, ANCHOR):
            assert extract("no digits here", strategy) is None

    def test_tie_takes_smallest(self) -> None:
        """Test the tie-break and its note."""
        result = explain("9 and 4 then 9 and 4", FREQUENT)
        assert result.value == 4
        assert "tie" in result.note

    def test_after_last_anchor(self) -> None:
        """Test that the last anchor occurrence wins, case-insensitively."""
        chain = "answer is 5\nmore 6\nTHE ANSWER IS 12 then 13"
        assert extract(chain, ANCHOR) == 12

    def test_missing_anchor(self) -> None:
        """Test chains without an anchor."""
        result = explain("just 42", ANCHOR)
        assert result.value is None
        assert result.note == "no anchor"

    def test_overlong_digit_run(self) -> None:
        """Test that runs beyond the int conversion limit never raise."""
        chain = "1" * 5000 + "\nThus answer is 70"
        result = explain(chain, FREQUENT)
        assert result.value == 70
        assert "tie" in result.note
        assert extract(chain, LAST) == 70
        assert extract(chain, ANCHOR) == 70
        tail = explain("total " + "9" * 5000, LAST)
        assert tail.text == "9" * 5000
        assert tail.value is None

    @pytest.mark.asyncio
    async def test_backend_passes_overlong_text(self) -> None:
        """Test that the backend answers with the normalized digit string."""
        backend = SurrogateBackend(LAST)
        response = await backend.complete("x 00" + "5" * 5000, InferenceParams())
        assert response.text == "5" * 5000

    def test_blank_anchor_rejected(self) -> None:
        """Test that after_anchor needs an anchor phrase."""
        with pytest.raises(ValidationError):
            ExtractorStrategy(kind=ExtractorKind.AFTER_ANCHOR, anchors=("  ",))

    def test_shuffle_invariance(self) -> None:
        """Test that most_frequent_number ignores line, in-line word and word order."""
        gen = random.Random(5)
        line_shuffle = parse_pipeline("line_shuffle")
        word_shuffle = parse_pipeline("word_shuffle")
        inline_shuffle = parse_pipeline("inline_word_shuffle")
        for i in range(200):
            record = ReasoningRecord(
                id=f"s{i}",
                benchmark=Benchmark.MATH_INTEGER,
                question="?",
                chain=random_chain(gen, answer="70"),
                gold_answer="70",
            )
            expected = extract(record.chain, FREQUENT)
            assert extract(apply_pipeline(line_shuffle, record), FREQUENT) == expected
            assert extract(apply_pipeline(word_shuffle, record), FREQUENT) == expected
            assert extract(apply_pipeline(inline_shuffle, record), FREQUENT) == expected


class TestFrequencyApparatus:
    """Tests for frequency-based and anchor-based extraction under noise."""

    def test_noise_defeats_frequency(self) -> None:
        """Test that k=2 noise flips most_frequent_number but not after_anchor."""
        records = _frequency_records()
        anchor = ExtractorStrategy(kind=ExtractorKind.AFTER_ANCHOR, anchors=("answer is",))

        assert _hits(records, "", FREQUENT) == 50
        assert _hits(records, "inject_noise(k=2)", FREQUENT) == 0
        assert _hits(records, "", anchor) == 50
        assert _hits(records, "inject_noise(k=2)", anchor) == 50

    def test_noise_hits_value(self) -> None:
        """Test that the injected false answer becomes the modal number."""
        (record,) = _frequency_records(1)
        noisy = apply_pipeline(parse_pipeline("inject_noise(k=2)"), record)
        assert noisy.count("Thus answer: 123.") == 6
        assert extract(noisy, FREQUENT) == 123


class TestSurrogateBackend:
    """Tests for SurrogateBackend."""

    @pytest.mark.asyncio
    async def test_complete(self) -> None:
        """Test that the backend answers with the extracted value."""
        backend = SurrogateBackend(ANCHOR)
        response = await backend.complete("so the answer is 70.", InferenceParams())
        assert backend.name == "surrogate:after_anchor"
        assert response.status == ResponseStatus.OK
        assert response.text == "70"

    @pytest.mark.asyncio
    async def test_empty_answer(self) -> None:
        """Test that a missing value gives an empty ok response."""
        response = await SurrogateBackend(LAST).complete("none", InferenceParams())
        assert response.status == ResponseStatus.OK
        assert response.text == ""
