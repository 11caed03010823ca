"""Pipeline orchestration: stages run in order, one writer, one report."""

import time
import uuid

from pydantic import ValidationError

from app.core.errors import AcceptanceError, ArtifactError, StageError
from app.core.metrics import metrics_collector
from app.core.worker_pool import WorkerPool
from app.models.report import RunReport
from app.models.schemas import STAGES, RunConfig
from app.pipeline.acceptance import verdict
from app.pipeline.artifacts import ArtifactStore
from app.pipeline.stages import STAGE_FUNCTIONS, PipelineContext
from config.logging_config import get_logger, log_performance, set_run_context
from config.settings import settings

logger = get_logger(__name__)

REPORT_FILE = "report.json"
METRICS_FILE = "metrics.prom"


def _load_report(store: ArtifactStore, cfg: RunConfig) -> RunReport:
    """Report of earlier stage runs in the same directory, so single-stage runs accumulate"""
    if store.exists(REPORT_FILE):
        try:
            previous = RunReport.model_validate(store.read_json(REPORT_FILE))
        except (ArtifactError, ValidationError) as e:
            logger.warning(f"Ignoring unreadable {REPORT_FILE}: {e}")
        else:
            if previous.run_name == cfg.run.name and previous.seed == cfg.run.seed:
                return previous.model_copy(update={"exit_code": 0, "error": None})
    return RunReport(run_name=cfg.run.name, seed=cfg.run.seed)


def run_pipeline(cfg: RunConfig, stages: list[str] | None = None) -> int:
    """Run the selected stages and write report.json and metrics.prom.

    Returns the exit code: 0 success, 2 config error, 3 numerical or
    artifact failure, 4 failed hard acceptance check.
    """
    selected = [s for s in STAGES if s in (stages or cfg.run.stages)]
    store = ArtifactStore(cfg.run.out)
    metrics_collector.reset()
    set_run_context(run_id=uuid.uuid4().hex[:12])
    report = _load_report(store, cfg)
    report.stages = [s for s in STAGES if s in {*report.stages, *selected}]
    started = time.time()
    logger.info(f"Run {cfg.run.name}: stages {', '.join(selected)} -> {store.root}")

    pool = WorkerPool(max_workers=cfg.run.workers, name="pipeline")
    ctx = PipelineContext(cfg, store, pool, report)
    exit_code = 0
    try:
        for stage in selected:
            STAGE_FUNCTIONS[stage](ctx)
    except StageError as e:
        report.error = str(e)
        exit_code = e.exit_code
        logger.error(f"Pipeline stopped in stage {e.stage} (exit {exit_code})")
    if exit_code == 0:
        try:
            exit_code = verdict(report, cfg.run.enforce_acceptance)
        except AcceptanceError as e:
            report.error = str(e)
            exit_code = e.exit_code
    logger.debug(f"Worker pool: {pool.get_stats()}")
    logger.info(f"Run metrics: {metrics_collector.get_summary()}")

    set_run_context(stage=None)
    report.exit_code = exit_code
    report.artifacts = sorted({*report.artifacts, *store.written, REPORT_FILE})
    store.write_model(REPORT_FILE, report)
    if settings.METRICS_ENABLED:
        metrics_collector.write_textfile(store.path(METRICS_FILE))
    log_performance(logger, "run_pipeline", (time.time() - started) * 1000, stages=len(selected), exit_code=exit_code)
    return exit_code
