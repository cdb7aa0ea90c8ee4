"""Run reports: deltas against a baseline and CSV / Markdown / JSON rendering."""

import csv
import io
import json
from collections.abc import Sequence
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict

from cot_probe.models.results import ConditionResult, Shade
from cot_probe.services.stats import UndefinedAccuracyError, delta, shade
from cot_probe.utils.errors import CotProbeError

CSV_COLUMNS = (
    "condition_id",
    "pipeline",
    "mode",
    "noise_k",
    "n_total",
    "n_success",
    "n_correct",
    "accuracy_pct",
    "se_pp",
    "delta_pp",
    "shade",
    "baseline",
)
SHADE_MARKS = {Shade.NONE: "", Shade.LIGHT: " ░", Shade.DARK: " ▓"}
SHADE_LEGEND = "░ ΔAcc < -25 pp, ▓ ΔAcc < -60 pp; * baseline"


class UnknownBaselineError(CotProbeError):
    """Базовое условие отсутствует среди результатов."""

    pass


class ReportLayout(str, Enum):
    GRID = "grid"
    ABLATION = "ablation"


class RunReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    layout: ReportLayout
    baseline_id: str
    rows: tuple[ConditionResult, ...]
    verdicts: dict[str, list[dict[str, Any]]] = {}

    @property
    def total_success(self) -> int:
        return sum(r.n_success for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    r.condition_id,
                    r.pipeline or "original",
                    r.mode,
                    r.noise_k,
                    r.n_total,
                    r.n_success,
                    r.n_correct,
                    r.accuracy_pct,
                    r.se_pp,
                    r.delta_pp,
                    r.shade.value,
                    int(r.condition_id == self.baseline_id),
                ]
            )
        return buf.getvalue()

    def to_markdown(self) -> str:
        if self.layout == ReportLayout.GRID:
            return _grid_markdown(self)
        return _ablation_markdown(self)

    def to_json(self) -> str:
        payload = {
            "layout": self.layout.value,
            "baseline_id": self.baseline_id,
            "total_success": self.total_success,
            "rows": [
                {
                    **r.model_dump(mode="json"),
                    "accuracy_pct": r.accuracy_pct,
                    "se_pp": r.se_pp,
                    "delta_pp": r.delta_pp,
                }
                for r in self.rows
            ],
            "verdicts": self.verdicts,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def build_report(
    results: Sequence[ConditionResult],
    baseline_id: str,
    layout: ReportLayout = ReportLayout.ABLATION,
    verdicts: dict[str, list[dict[str, Any]]] | None = None,
) -> RunReport:
    """
    Собирает отчёт с дельтами относительно базового условия.

    Дельта хранится округлённой до 0.1 п.п., оттенок считается по ней же.

    Raises:
        UnknownBaselineError: baseline_id нет среди результатов
        UndefinedAccuracyError: у базового условия нет успешных ответов
    """
    base = next((r for r in results if r.condition_id == baseline_id), None)
    if base is None:
        raise UnknownBaselineError(f"baseline {baseline_id!r} is not among the conditions")
    if base.accuracy is None:
        raise UndefinedAccuracyError(f"baseline {baseline_id!r} has no successful responses")

    rows = []
    for r in results:
        if r.accuracy is None:
            rows.append(r)
            continue
        d = round(delta(r.accuracy, base.accuracy), 1)
        rows.append(r.model_copy(update={"delta_vs_baseline": d, "shade": shade(d)}))
    return RunReport(
        layout=layout, baseline_id=baseline_id, rows=tuple(rows), verdicts=verdicts or {}
    )


def _table(header: Sequence[str], body: Sequence[Sequence[str]], right: set[int]) -> str:
    widths = [len(h) for h in header]
    for row in body:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]

    def fmt(row: Sequence[str]) -> str:
        cells = [c.rjust(w) if i in right else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths))]
        return "| " + " | ".join(cells) + " |"

    rule = "|" + "|".join(
        ("-" * (w + 1) + ":") if i in right else ("-" * (w + 2)) for i, w in enumerate(widths)
    ) + "|"
    return "\n".join([fmt(header), rule, *(fmt(row) for row in body)]) + "\n"


def _ablation_markdown(report: RunReport) -> str:
    header = ("Condition", "Mode", "n", "Acc (%)", "SE (pp)", "ΔAcc (pp)", "Shade")
    body = []
    for r in report.rows:
        name = r.pipeline or "original"
        if r.noise_k:
            name = f"{name} +noise k={r.noise_k}"
        if r.condition_id == report.baseline_id:
            name += " *"
        body.append(
            (
                name,
                r.mode,
                str(r.n_success),
                r.accuracy_pct,
                r.se_pp,
                r.delta_pp,
                "" if r.shade == Shade.NONE else r.shade.value,
            )
        )
    return _table(header, body, right={2, 3, 4, 5}) + f"\n{SHADE_LEGEND}\n"


def _grid_markdown(report: RunReport) -> str:
    ks = sorted({r.noise_k for r in report.rows})
    cells: dict[tuple[str, str], dict[int, ConditionResult]] = {}
    for r in report.rows:
        cells.setdefault((r.pipeline or "original", r.mode), {})[r.noise_k] = r

    header = ("Pipeline", "Mode", *(f"k={k}" for k in ks))
    body = []
    for (pipeline, mode), by_k in cells.items():
        row = [pipeline, mode]
        for k in ks:
            r = by_k.get(k)
            if r is None:
                row.append("")
                continue
            text = f"{r.accuracy_pct} ({r.delta_pp}){SHADE_MARKS[r.shade]}"
            if r.condition_id == report.baseline_id:
                text += " *"
            row.append(text)
        body.append(row)
    return _table(header, body, right=set(range(2, 2 + len(ks)))) + f"\n{SHADE_LEGEND}\n"
