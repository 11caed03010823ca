import argparse
import sys

from app.core.errors import ConfigError
from app.models.schemas import STAGES, load_run_config
from app.pipeline.runner import run_pipeline
from config.logging_config import get_logger, setup_logging
from config.settings import settings

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaknull",
        description="Weak-null quasilinear wave scattering laboratory",
    )
    parser.add_argument("stage", nargs="?", choices=[*STAGES, "all"], help="stage to run (default: the config's [run] stages)")
    parser.add_argument("--stage", dest="stage_flag", choices=[*STAGES, "all"], help="same as the positional stage")
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--out", help="output directory (overrides [run] out)")
    parser.add_argument("--workers", type=int, help="worker count (overrides [run] workers)")
    parser.add_argument("--seed", type=int, help="random seed (overrides [run] seed)")
    parser.add_argument("--log-level", help="console and file log level")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)
    try:
        settings.validate_required_settings()
        cfg = load_run_config(args.config).with_overrides(out=args.out, workers=args.workers, seed=args.seed)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return e.exit_code

    stage = args.stage_flag or args.stage
    if stage is None:
        stages = None
    elif stage == "all":
        stages = list(STAGES)
    else:
        stages = [stage]
    return run_pipeline(cfg, stages)


if __name__ == "__main__":
    sys.exit(main())
