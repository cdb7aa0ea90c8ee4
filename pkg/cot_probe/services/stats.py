"""Accuracy, binomial standard error, deltas and shading."""

import math
from collections.abc import Sequence

from cot_probe.models.inference import ResponseStatus
from cot_probe.models.results import ConditionResult, Shade
from cot_probe.models.verdict import Verdict
from cot_probe.utils.errors import CotProbeError

LIGHT_THRESHOLD_PP = -25.0
DARK_THRESHOLD_PP = -60.0


class UndefinedAccuracyError(CotProbeError):
    """Нет ни одного успешного ответа."""

    pass


def binomial_se(p: float, n: int) -> float:
    if n <= 0:
        raise UndefinedAccuracyError("standard error needs at least one success")
    return math.sqrt(p * (1.0 - p) / n)


def counts_as_success(status: ResponseStatus, count_refusals: bool = True) -> bool:
    """
    Входит ли ответ в знаменатель #success.

    Сбои транспорта и таймауты не входят никогда; отказы - по настройке.
    """
    if status == ResponseStatus.OK:
        return True
    if status == ResponseStatus.REFUSED:
        return count_refusals
    return False


def accuracy(
    verdicts: Sequence[Verdict | None],
    statuses: Sequence[ResponseStatus],
    *,
    condition_id: str = "",
    pipeline: str = "",
    mode: str = "ret",
    noise_k: int = 0,
    count_refusals: bool = True,
) -> ConditionResult:
    """
    Считает точность условия.

    Args:
        verdicts: Вердикты по записям (None для ответов без вердикта)
        statuses: Статусы ответов в том же порядке
        condition_id: Идентификатор условия
        count_refusals: Считать отказы неверными ответами в знаменателе

    Returns:
        ConditionResult без дельты (её проставляет отчёт)

    Raises:
        UndefinedAccuracyError: n_success = 0
    """
    if len(verdicts) != len(statuses):
        raise ValueError("verdicts and statuses must have the same length")

    n_success = 0
    n_correct = 0
    for verdict, status in zip(verdicts, statuses):
        if not counts_as_success(status, count_refusals):
            continue
        n_success += 1
        if status == ResponseStatus.OK and verdict is not None and verdict.correct:
            n_correct += 1

    if n_success == 0:
        raise UndefinedAccuracyError(f"no successful responses for {condition_id or 'condition'}")

    p = n_correct / n_success
    return ConditionResult(
        condition_id=condition_id,
        pipeline=pipeline,
        mode=mode,
        noise_k=noise_k,
        n_total=len(statuses),
        n_success=n_success,
        n_correct=n_correct,
        accuracy=p,
        se=binomial_se(p, n_success),
    )


def undefined_result(
    condition_id: str,
    n_total: int,
    *,
    pipeline: str = "",
    mode: str = "ret",
    noise_k: int = 0,
) -> ConditionResult:
    """Строка отчёта для условия без успешных ответов."""
    return ConditionResult(
        condition_id=condition_id,
        pipeline=pipeline,
        mode=mode,
        noise_k=noise_k,
        n_total=n_total,
        n_success=0,
        n_correct=0,
        accuracy=None,
        se=None,
    )


def delta(value: float, baseline: float) -> float:
    """Difference of two accuracies in percentage points."""
    return 100.0 * (value - baseline)


def shade(delta_pp: float | None) -> Shade:
    if delta_pp is None:
        return Shade.NONE
    if delta_pp < DARK_THRESHOLD_PP:
        return Shade.DARK
    if delta_pp < LIGHT_THRESHOLD_PP:
        return Shade.LIGHT
    return Shade.NONE
