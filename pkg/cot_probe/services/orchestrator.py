"""Run engine: ingest, collect, run, sweep and report rebuilding."""

import asyncio
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from cot_probe.config.run_config import BackendSpec, RunConfig, RunConfigError, SweepGrid
from cot_probe.models.inference import InferenceParams, ResponseStatus
from cot_probe.models.pipeline import CORPUS_VOCAB, ProcessorKind, TransformPipeline
from cot_probe.models.prompt import EvalMode
from cot_probe.models.records import Benchmark, QuestionItem, ReasoningRecord
from cot_probe.models.results import ConditionResult
from cot_probe.models.verdict import VerdictEntry
from cot_probe.services.archive import ResponseArchive, VerdictArchive, request_key
from cot_probe.services.backends import (
    Backend,
    BackendConfigError,
    RecordingBackend,
    ReplayBackend,
    collect_records,
)
from cot_probe.services.judging import (
    CHOICES,
    Judge,
    JudgmentUnavailableError,
    load_judge_template,
    parse_gold_number,
)
from cot_probe.services.openrouter_client import OpenRouterClient
from cot_probe.services.pipeline import condition_label, parse_pipeline, with_noise
from cot_probe.services.processors import (
    apply_pipeline,
    load_vocabulary,
    register_vocabulary,
)
from cot_probe.services.prompting import PromptTemplate, build_prompt
from cot_probe.services.report import ReportLayout, RunReport, build_report
from cot_probe.services.stats import UndefinedAccuracyError, accuracy, undefined_result
from cot_probe.services.surrogate import SurrogateBackend
from cot_probe.utils.errors import CotProbeError
from cot_probe.utils.file_helpers import MalformedLineError, read_jsonl, write_text_atomic
from cot_probe.utils.rng import mix
from cot_probe.utils.segmentation import register_vocabulary_scheme, split_words

logger = logging.getLogger(__name__)

CELLS_FILE = "cells.json"
RESPONSES_FILE = "responses.jsonl"
JUDGE_RESPONSES_FILE = "judge_responses.jsonl"
VERDICTS_FILE = "verdicts.jsonl"
RECORDS_FILE = "records.jsonl"
MANIFEST_VERSION = 1


class IngestError(CotProbeError):
    """Ошибка чтения датасета; содержит номер строки."""

    def __init__(self, path: Path, line_no: int, reason: str) -> None:
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class ResumeRequiredError(CotProbeError):
    """В каталоге запуска уже есть вердикты, а --resume не указан."""

    pass


@dataclass(frozen=True)
class Cell:
    """One grid cell: a pipeline with noise, a mode and a derived seed."""

    index: int
    pipeline: TransformPipeline
    mode: EvalMode
    noise_k: int
    baseline: bool = False

    @property
    def condition_id(self) -> str:
        return f"{condition_label(self.pipeline)}@{self.mode.value}"

    @property
    def base_label(self) -> str:
        base = self.pipeline.model_copy(
            update={
                "steps": tuple(
                    s for s in self.pipeline.steps if s.kind != ProcessorKind.INJECT_NOISE
                )
            }
        )
        return condition_label(base)

    @property
    def key(self) -> str:
        return f"{self.condition_id}#{self.pipeline.run_seed:016x}"

    def manifest(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "key": self.key,
            "condition_id": self.condition_id,
            "pipeline": self.base_label,
            "dsl": self.pipeline.to_dsl(),
            "noise_k": self.noise_k,
            "mode": self.mode.value,
            "seed": self.pipeline.run_seed,
            "baseline": self.baseline,
        }


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(p) for p in err["loc"])
    return f"{where}: {err['msg']}" if where else err["msg"]


def _check_gold(record: ReasoningRecord | QuestionItem) -> None:
    if record.benchmark == Benchmark.MATH_INTEGER:
        parse_gold_number(record.gold_answer)
    elif record.benchmark == Benchmark.MULTIPLE_CHOICE:
        if record.gold_answer.strip().upper() not in CHOICES:
            raise ValueError(f"gold_answer must be one of {CHOICES}")


async def _ingest_models(path: Path, model: type[BaseModel]) -> list[Any]:
    if not path.exists():
        raise IngestError(path, 0, "file not found")
    try:
        rows = await read_jsonl(path, strict=True)
    except MalformedLineError as e:
        raise IngestError(path, e.line_no, "malformed JSON line")

    items: list[Any] = []
    seen: dict[str, int] = {}
    for line_no, row in rows:
        try:
            item = model.model_validate(row)
            _check_gold(item)
        except ValidationError as e:
            raise IngestError(path, line_no, _first_error(e))
        except ValueError as e:
            raise IngestError(path, line_no, str(e))
        if item.id in seen:
            raise IngestError(path, line_no, f"duplicate id {item.id!r} (first at line {seen[item.id]})")
        seen[item.id] = line_no
        items.append(item)

    if not items:
        logger.warning(f"Dataset {path} is empty")
    else:
        logger.info(f"Ingested {len(items)} items from {path}")
    return items


async def ingest(path: Path) -> list[ReasoningRecord]:
    """
    Читает датасет цепочек (JSONL, одна запись на строку).

    Raises:
        IngestError: Битая строка, пропущенное поле или повтор id
    """
    return await _ingest_models(path, ReasoningRecord)


async def ingest_questions(path: Path) -> list[QuestionItem]:
    return await _ingest_models(path, QuestionItem)


async def open_backend(
    spec: BackendSpec, archive_path: Path | None = None, parallel: int | None = None
) -> Backend:
    """Creates a backend handle; live backends record into `archive_path`."""
    if spec.kind == "surrogate":
        assert spec.strategy is not None
        return SurrogateBackend(spec.strategy)
    if spec.kind == "replay":
        assert spec.archive is not None
        if not spec.archive.exists():
            raise BackendConfigError(f"replay archive not found: {spec.archive}")
        return ReplayBackend(await ResponseArchive.open(spec.archive, writable=False))

    client = OpenRouterClient(max_parallel=parallel)
    if archive_path is None:
        return client
    return RecordingBackend(client, await ResponseArchive.open(archive_path))


def _inference_for(spec: BackendSpec, params: InferenceParams) -> InferenceParams:
    if spec.kind == "live" and spec.model_id:
        return params.model_copy(update={"model_id": spec.model_id})
    return params


def _register_vocabularies(config: RunConfig, records: Sequence[ReasoningRecord], cells: Sequence[Cell]) -> None:
    for scheme_id, path in config.tokenizer_schemes.items():
        register_vocabulary_scheme(scheme_id, path)
    for vocab_id, path in config.vocabularies.items():
        load_vocabulary(vocab_id, path)

    wants_corpus = any(
        step.vocabulary_id == CORPUS_VOCAB for cell in cells for step in cell.pipeline.steps
    )
    if wants_corpus and CORPUS_VOCAB not in config.vocabularies:
        words = [w for record in records for w in split_words(record.chain)]
        if not words:
            raise RunConfigError("corpus vocabulary requested but the dataset has no words")
        register_vocabulary(CORPUS_VOCAB, words)


def plan_cells(config: RunConfig, grid: SweepGrid | None = None) -> list[Cell]:
    """
    Строит ячейки сетки: pipeline x noise x mode, без повторов.

    Seed ячейки = mix(run_seed, индекс ячейки).
    """
    if grid is None:
        candidates = [(config.pipeline, 0, config.mode)]
    else:
        modes = grid.modes or [config.mode]
        candidates = [(dsl, k, mode) for dsl in grid.pipelines for k in grid.noise for mode in modes]

    cells: list[Cell] = []
    seen: set[str] = set()
    for dsl, k, mode in candidates:
        probe = with_noise(parse_pipeline(dsl), k)
        label = f"{condition_label(probe)}@{mode.value}"
        if label in seen:
            logger.warning(f"Duplicate sweep cell {label} skipped")
            continue
        seen.add(label)
        index = len(cells)
        pipeline = with_noise(parse_pipeline(dsl, run_seed=mix(config.run_seed, index)), k)
        cells.append(Cell(index=index, pipeline=pipeline, mode=mode, noise_k=pipeline.noise_multiplier))

    if not cells:
        raise RunConfigError("sweep grid is empty")

    baseline_index = 0
    if grid is not None and grid.baseline is not None:
        matches = [c.index for c in cells if c.condition_id == grid.baseline]
        if not matches:
            raise RunConfigError(f"baseline {grid.baseline!r} is not a grid cell")
        baseline_index = matches[0]
    else:
        identity = [c.index for c in cells if c.pipeline.is_identity]
        if identity:
            baseline_index = identity[0]
    cells[baseline_index] = replace(cells[baseline_index], baseline=True)
    return cells


class RunEngine:
    """Выполняет ячейки сетки над набором записей."""

    def __init__(
        self,
        config: RunConfig,
        backend: Backend,
        judge: Judge,
        verdicts: VerdictArchive,
        template: PromptTemplate | None = None,
    ) -> None:
        self.config = config
        self.backend = backend
        self.judge = judge
        self.verdicts = verdicts
        self.template = template
        self.params = _inference_for(config.backend, config.inference)

    async def _process(self, cell: Cell, record: ReasoningRecord) -> None:
        chain = apply_pipeline(cell.pipeline, record)
        prompt = build_prompt(
            record,
            chain,
            cell.mode,
            include_question=self.config.include_question and cell.pipeline.include_question,
            include_chain=self.config.include_chain and cell.pipeline.include_chain,
            template=self.template,
        )
        response = await self.backend.complete(prompt, self.params, sample_index=0)

        verdict = None
        status = response.status
        note = ""
        if response.status == ResponseStatus.OK:
            assert response.text is not None
            try:
                verdict = await self.judge.judge(response.text, record, cell.mode)
            except JudgmentUnavailableError as e:
                # Ответ без вердикта не входит в #success
                logger.warning(f"Judgment unavailable: record {record.id} in {cell.condition_id}: {e}")
                status = ResponseStatus.TRANSPORT_ERROR
                note = f"judgment unavailable: {e}"
        elif response.status == ResponseStatus.REFUSED:
            logger.warning(f"Refused: record {record.id} in {cell.condition_id}")

        await self.verdicts.append(
            VerdictEntry(
                cell=cell.key,
                record_id=record.id,
                status=status,
                verdict=verdict,
                response_key=request_key(prompt.text, self.params, 0),
                note=note,
            )
        )

    async def run_cell(self, cell: Cell, records: Sequence[ReasoningRecord]) -> None:
        pending = [r for r in records if not self.verdicts.has(cell.key, r.id)]
        done = len(records) - len(pending)
        if done:
            logger.warning(f"Resuming {cell.condition_id}: {done} records already judged")
        if not pending:
            return

        semaphore = asyncio.Semaphore(self.config.parallel)

        async def worker(record: ReasoningRecord) -> None:
            async with semaphore:
                await self._process(cell, record)

        tasks = [asyncio.create_task(worker(r)) for r in pending]
        try:
            await asyncio.gather(*tasks)
        except BaseException:
            # Останавливаем остальные записи, уже записанные вердикты остаются
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)
            raise
        logger.info(f"Cell {cell.index} {cell.condition_id}: {len(pending)} records judged")


async def _build_judge(config: RunConfig) -> Judge:
    judge_cfg = config.judge
    if judge_cfg.kind == "local":
        return Judge(rule=judge_cfg.extraction_rule)
    assert judge_cfg.backend is not None
    backend = await open_backend(
        judge_cfg.backend, config.out_dir / JUDGE_RESPONSES_FILE, config.parallel
    )
    template = load_judge_template(judge_cfg.template) if judge_cfg.template else None
    return Judge(
        rule=judge_cfg.extraction_rule,
        external=backend,
        external_params=_inference_for(judge_cfg.backend, judge_cfg.params),
        template=template,
    )


async def _write_manifest(
    config: RunConfig, cells: Sequence[Cell], records: Sequence[ReasoningRecord], layout: ReportLayout
) -> None:
    manifest = {
        "version": MANIFEST_VERSION,
        "layout": layout.value,
        "backend": config.backend.label(),
        "count_refusals": config.count_refusals,
        "run_seed": config.run_seed,
        "record_ids": sorted(r.id for r in records),
        "cells": [c.manifest() for c in cells],
    }
    await write_text_atomic(
        config.out_dir / CELLS_FILE, json.dumps(manifest, ensure_ascii=False, indent=2) + "\n"
    )


async def execute(config: RunConfig, grid: SweepGrid | None = None) -> RunReport:
    """
    Выполняет запуск (grid=None) или свип и пишет отчёты.

    Raises:
        ResumeRequiredError: Каталог уже содержит вердикты, а resume выключен
    """
    layout = ReportLayout.ABLATION if grid is None else ReportLayout.GRID
    verdicts_path = config.out_dir / VERDICTS_FILE
    if verdicts_path.exists() and verdicts_path.stat().st_size > 0 and not config.resume:
        raise ResumeRequiredError(f"{config.out_dir} already holds verdicts; pass --resume")

    records = await ingest(config.dataset)
    if not records:
        raise RunConfigError(f"no records in {config.dataset}")
    cells = plan_cells(config, grid)
    _register_vocabularies(config, records, cells)
    template = PromptTemplate.from_file(config.template) if config.template else None

    await _write_manifest(config, cells, records, layout)
    verdicts = await VerdictArchive.open(verdicts_path)
    backend = await open_backend(config.backend, config.out_dir / RESPONSES_FILE, config.parallel)
    judge = await _build_judge(config)
    engine = RunEngine(config, backend, judge, verdicts, template)
    logger.info(
        f"Running {len(cells)} cell(s) x {len(records)} records with {config.backend.label()}"
    )
    try:
        for cell in cells:
            await engine.run_cell(cell, records)
    finally:
        await backend.aclose()
        await judge.aclose()

    return await rebuild_report(config.out_dir)


async def run(config: RunConfig) -> RunReport:
    return await execute(config, None)


async def sweep(config: RunConfig, grid: SweepGrid | None = None) -> RunReport:
    grid = grid or config.grid or SweepGrid(pipelines=[config.pipeline])
    return await execute(config, grid)


def _verdict_rows(entries: Sequence[VerdictEntry]) -> list[dict[str, Any]]:
    rows = []
    for e in entries:
        row: dict[str, Any] = {"record_id": e.record_id, "status": e.status.value}
        if e.note:
            row["note"] = e.note
        if e.verdict is not None:
            row.update(
                correct=e.verdict.correct,
                extracted=e.verdict.extracted,
                method=e.verdict.method.value,
                note=e.verdict.note,
            )
        rows.append(row)
    return rows


async def rebuild_report(out_dir: Path, layout: ReportLayout | None = None) -> RunReport:
    """
    Пересобирает report.csv/md/json из cells.json и архива вердиктов.

    Args:
        out_dir: Каталог запуска
        layout: Переопределение раскладки отчёта

    Returns:
        RunReport
    """
    manifest_path = out_dir / CELLS_FILE
    if not manifest_path.exists():
        raise RunConfigError(f"no {CELLS_FILE} in {out_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    record_ids = set(manifest["record_ids"])
    verdicts = await VerdictArchive.open(out_dir / VERDICTS_FILE)

    results: list[ConditionResult] = []
    per_record: dict[str, list[dict[str, Any]]] = {}
    baseline_id = ""
    for cell in manifest["cells"]:
        entries = [e for e in verdicts.for_cell(cell["key"]) if e.record_id in record_ids]
        missing = len(record_ids) - len(entries)
        if missing:
            logger.warning(f"{cell['condition_id']}: {missing} records have no verdict")
        try:
            result = accuracy(
                [e.verdict for e in entries],
                [e.status for e in entries],
                condition_id=cell["condition_id"],
                pipeline=cell["pipeline"],
                mode=cell["mode"],
                noise_k=cell["noise_k"],
                count_refusals=manifest["count_refusals"],
            )
        except UndefinedAccuracyError:
            logger.warning(f"{cell['condition_id']}: no successful responses, accuracy undefined")
            result = undefined_result(
                cell["condition_id"],
                len(entries),
                pipeline=cell["pipeline"],
                mode=cell["mode"],
                noise_k=cell["noise_k"],
            )
        results.append(result)
        per_record[cell["condition_id"]] = _verdict_rows(entries)
        if cell["baseline"]:
            baseline_id = cell["condition_id"]

    report = build_report(
        results, baseline_id, layout or ReportLayout(manifest["layout"]), per_record
    )
    await write_text_atomic(out_dir / "report.csv", report.to_csv())
    await write_text_atomic(out_dir / "report.md", report.to_markdown())
    await write_text_atomic(out_dir / "report.json", report.to_json())
    logger.info(f"Report written to {out_dir}")
    return report


async def transform_preview(config: RunConfig, limit: int | None = None) -> list[tuple[str, str]]:
    """Dry run: transformed chains exactly as `run` would evaluate them."""
    records = await ingest(config.dataset)
    cells = plan_cells(config)
    _register_vocabularies(config, records, cells)
    pipeline = cells[0].pipeline
    selected = records if limit is None else records[:limit]
    return [(r.id, apply_pipeline(pipeline, r)) for r in selected]


async def collect(
    questions_path: Path,
    backend_spec: BackendSpec,
    params: InferenceParams,
    out_dir: Path,
    samples: int = 10,
    parallel: int = 8,
) -> Path:
    """
    Stage 1: собирает цепочки и пишет records.jsonl.

    Returns:
        Путь к records.jsonl
    """
    questions = await ingest_questions(questions_path)
    backend = await open_backend(backend_spec, out_dir / RESPONSES_FILE, parallel)
    try:
        records = await collect_records(
            questions, _inference_for(backend_spec, params), backend, samples, parallel
        )
    finally:
        await backend.aclose()

    target = out_dir / RECORDS_FILE
    lines = "".join(json.dumps(r.model_dump(mode="json"), ensure_ascii=False) + "\n" for r in records)
    await write_text_atomic(target, lines)
    logger.info(f"Wrote {len(records)} records to {target}")
    return target
