"""Main application entry point."""

import argparse
import logging
import sys

from pydantic import ValidationError

from cot_probe.config.settings import get_settings
from cot_probe.handlers.commands import setup_handlers
from cot_probe.services.orchestrator import ResumeRequiredError
from cot_probe.utils.errors import CotProbeError
from cot_probe.utils.messages import MESSAGES

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stdout)],
    )
    # Отключаем подробные логи сторонних библиотек
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("uvicorn").setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cot-probe",
        description="Perturb reasoning chains and measure answer extraction accuracy",
    )
    parser.add_argument("--log-level", help="Overrides COT_PROBE_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    setup_handlers(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Главная функция приложения."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or get_settings().log_level)

    try:
        return int(args.handler(args))
    except ResumeRequiredError as e:
        print(MESSAGES["resume_required"].format(details=e), file=sys.stderr)
        return 1
    except CotProbeError as e:
        logger.debug("Command failed", exc_info=True)
        print(MESSAGES["general_error"].format(details=e), file=sys.stderr)
        return 1
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        print(MESSAGES["config_error"].format(details=details), file=sys.stderr)
        return 2
    except ValueError as e:
        print(MESSAGES["config_error"].format(details=e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
