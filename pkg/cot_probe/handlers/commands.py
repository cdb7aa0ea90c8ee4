"""CLI subcommands: collect, transform, run, sweep, report, serve-stub."""

import argparse
import asyncio
import logging
from pathlib import Path
from typing import Any

import uvicorn

from cot_probe.config.run_config import BackendSpec, RunConfig, SweepGrid, load_run_config
from cot_probe.models.inference import InferenceParams
from cot_probe.models.prompt import EvalMode
from cot_probe.services.orchestrator import collect, rebuild_report, run, sweep, transform_preview
from cot_probe.services.report import ReportLayout
from cot_probe.services.stub_server import StubServer, parse_script
from cot_probe.utils.file_helpers import create_preview
from cot_probe.utils.messages import MESSAGES

logger = logging.getLogger(__name__)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run config")
    parser.add_argument("--dataset", type=Path, help="Records JSONL")
    parser.add_argument("--pipeline", help='Pipeline DSL, e.g. "remove_alphabet,line_shuffle"')
    parser.add_argument("--mode", choices=[m.value for m in EvalMode])
    parser.add_argument("--backend", help="live:<model> | replay:<archive> | surrogate:<strategy>")
    parser.add_argument("--seed", type=int, dest="run_seed")
    parser.add_argument("--parallel", type=int)
    parser.add_argument("--out", type=Path, dest="out_dir")
    parser.add_argument("--resume", action="store_true", default=None)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by explicit flags."""
    overrides: dict[str, Any] = {
        "dataset": args.dataset,
        "pipeline": args.pipeline,
        "mode": args.mode,
        "backend": args.backend,
        "run_seed": args.run_seed,
        "parallel": args.parallel,
        "out_dir": args.out_dir,
        "resume": args.resume,
    }
    if args.config is not None:
        return load_run_config(args.config, **overrides)
    return RunConfig.model_validate({k: v for k, v in overrides.items() if v is not None})


def _parse_noise(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid noise list: {text!r}")


def grid_from_args(args: argparse.Namespace, config: RunConfig) -> SweepGrid:
    base = config.grid or SweepGrid(pipelines=[config.pipeline])
    update: dict[str, Any] = {}
    if args.grid:
        update["pipelines"] = args.grid
    if args.noise is not None:
        update["noise"] = args.noise
    if args.modes:
        update["modes"] = args.modes
    if args.baseline is not None:
        update["baseline"] = args.baseline
    return SweepGrid.model_validate({**base.model_dump(), **update})


def handle_collect(args: argparse.Namespace) -> int:
    params = InferenceParams(temperature=args.temperature)
    path = asyncio.run(
        collect(
            args.questions,
            BackendSpec.parse(args.backend),
            params,
            args.out_dir,
            samples=args.samples,
            parallel=args.parallel,
        )
    )
    print(MESSAGES["collect_done"].format(path=path))
    return 0


def handle_transform(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    for record_id, chain in asyncio.run(transform_preview(config, args.limit)):
        print(MESSAGES["transform_header"].format(record_id=record_id))
        print(create_preview(chain, args.preview) if args.preview else chain)
        print()
    return 0


def handle_run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    report = asyncio.run(run(config))
    print(MESSAGES["run_done"].format(conditions=len(report.rows), out_dir=config.out_dir))
    return 0


def handle_sweep(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    report = asyncio.run(sweep(config, grid_from_args(args, config)))
    print(MESSAGES["sweep_done"].format(conditions=len(report.rows), out_dir=config.out_dir))
    return 0


def handle_report(args: argparse.Namespace) -> int:
    layout = ReportLayout(args.layout) if args.layout else None
    asyncio.run(rebuild_report(args.out_dir, layout))
    print(MESSAGES["report_done"].format(out_dir=args.out_dir))
    return 0


def handle_serve_stub(args: argparse.Namespace) -> int:
    script = parse_script(args.script)
    server = StubServer(script=script, reply=args.reply, reasoning=args.reasoning)
    print(MESSAGES["stub_running"].format(host=args.host, port=args.port, script=args.script))
    uvicorn.run(server.get_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def setup_handlers(subparsers: "argparse._SubParsersAction[argparse.ArgumentParser]") -> None:
    """
    Регистрирует все подкоманды.

    Args:
        subparsers: Результат parser.add_subparsers()
    """
    p = subparsers.add_parser("collect", help="Stage 1: collect reasoning chains")
    p.add_argument("--questions", type=Path, required=True, help="Questions JSONL")
    p.add_argument("--backend", required=True, help="live:<model> or replay:<archive>")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--temperature", type=float, default=0.5)
    p.add_argument("--parallel", type=int, default=8)
    p.add_argument("--out", type=Path, dest="out_dir", default=Path("runs/collect"))
    p.set_defaults(handler=handle_collect)

    p = subparsers.add_parser("transform", help="Print transformed chains (dry run)")
    _add_run_options(p)
    p.add_argument("--limit", type=int)
    p.add_argument("--preview", type=int, help="Truncate each chain to N characters")
    p.set_defaults(handler=handle_transform)

    p = subparsers.add_parser("run", help="Evaluate one pipeline")
    _add_run_options(p)
    p.set_defaults(handler=handle_run)

    p = subparsers.add_parser("sweep", help="Evaluate a pipeline x noise x mode grid")
    _add_run_options(p)
    p.add_argument("--grid", action="append", help="Pipeline DSL of one grid row (repeatable)")
    p.add_argument("--noise", type=_parse_noise, help='Noise multipliers, e.g. "0,1,2,3"')
    p.add_argument(
        "--modes", action="append", choices=[m.value for m in EvalMode], help="Repeatable"
    )
    p.add_argument("--baseline", help="Baseline condition id, e.g. original@ret")
    p.set_defaults(handler=handle_sweep)

    p = subparsers.add_parser("report", help="Rebuild reports from the verdict archive")
    p.add_argument("--out", type=Path, dest="out_dir", required=True)
    p.add_argument("--layout", choices=[layout.value for layout in ReportLayout])
    p.set_defaults(handler=handle_report)

    p = subparsers.add_parser("serve-stub", help="Serve a scripted chat-completions endpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8088)
    p.add_argument("--script", default="200", help='Status sequence, e.g. "429,429,200"')
    p.add_argument("--reply", default="70")
    p.add_argument("--reasoning")
    p.set_defaults(handler=handle_serve_stub)
