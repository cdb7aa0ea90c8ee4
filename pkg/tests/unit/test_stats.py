"""Tests for accuracy statistics."""

import random

import pytest

from cot_probe.models.inference import ResponseStatus
from cot_probe.models.results import Shade
from cot_probe.models.verdict import JudgeMethod, Verdict
from cot_probe.services.stats import (
    UndefinedAccuracyError,
    accuracy,
    binomial_se,
    delta,
    shade,
)

RIGHT = Verdict(correct=True, extracted="70", method=JudgeMethod.NUMERIC)
WRONG = Verdict(correct=False, extracted="7", method=JudgeMethod.NUMERIC)


def _ok(correct: int, total: int) -> tuple[list[Verdict | None], list[ResponseStatus]]:
    verdicts: list[Verdict | None] = [RIGHT] * correct + [WRONG] * (total - correct)
    return verdicts, [ResponseStatus.OK] * total


class TestAccuracy:
    """Tests for accuracy."""

    def test_reference_point(self) -> None:
        """Test 274 of 300 correct."""
        result = accuracy(*_ok(274, 300), condition_id="original@ret")
        assert result.accuracy_pct == "91.33"
        assert result.se_pp == "1.62"
        assert result.n_success == 300
        assert result.n_correct == 274

    def test_se_bound(self) -> None:
        """Test that the standard error stays under 2.9 pp from 300 successes."""
        gen = random.Random(3)
        for _ in range(1000):
            n = gen.randint(300, 2000)
            p = gen.randint(0, n) / n
            assert 100 * binomial_se(p, n) <= 2.9

    def test_failures_excluded(self) -> None:
        """Test that transport errors and timeouts leave the denominator."""
        verdicts = [RIGHT, RIGHT, None, None]
        statuses = [
            ResponseStatus.OK,
            ResponseStatus.OK,
            ResponseStatus.TRANSPORT_ERROR,
            ResponseStatus.TIMEOUT,
        ]
        result = accuracy(verdicts, statuses)
        assert result.n_total == 4
        assert result.n_success == 2
        assert result.accuracy == 1.0

    def test_refusal_policy(self) -> None:
        """Test both refusal policies."""
        verdicts = [RIGHT, None]
        statuses = [ResponseStatus.OK, ResponseStatus.REFUSED]
        assert accuracy(verdicts, statuses).accuracy == 0.5
        assert accuracy(verdicts, statuses, count_refusals=False).accuracy == 1.0

    def test_undefined(self) -> None:
        """Test that zero successes raise UndefinedAccuracyError."""
        with pytest.raises(UndefinedAccuracyError):
            accuracy([None], [ResponseStatus.TIMEOUT])
        with pytest.raises(UndefinedAccuracyError):
            binomial_se(0.5, 0)

    def test_length_mismatch(self) -> None:
        """Test that misaligned inputs are rejected."""
        with pytest.raises(ValueError):
            accuracy([RIGHT], [])


class TestDelta:
    """Tests for delta and shade."""

    def test_antisymmetric(self) -> None:
        """Test delta antisymmetry and zero on the diagonal."""
        gen = random.Random(11)
        for _ in range(1000):
            a, b = gen.random(), gen.random()
            assert delta(a, b) == pytest.approx(-delta(b, a))
            assert delta(a, a) == 0.0

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (None, Shade.NONE),
            (4.7, Shade.NONE),
            (-25.0, Shade.NONE),
            (-25.04, Shade.LIGHT),
            (-25.1, Shade.LIGHT),
            (-32.6, Shade.LIGHT),
            (-60.0, Shade.LIGHT),
            (-60.1, Shade.DARK),
            (-91.3, Shade.DARK),
        ],
    )
    def test_shade(self, value: float | None, expected: Shade) -> None:
        """Test shading thresholds on the stored delta."""
        assert shade(value) == expected
