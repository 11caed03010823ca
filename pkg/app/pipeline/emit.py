"""Report emission: plot-ready CSV bundles and the Markdown summary."""

from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app.core.errors import ArtifactError
from app.models.report import RunReport
from app.pipeline.artifacts import ArtifactStore
from config.logging_config import get_logger

logger = get_logger(__name__)

templates = Environment(
    loader=FileSystemLoader(Path(__file__).parent / "templates"),
    undefined=StrictUndefined,
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)

CHECK_COLUMNS = ("stage", "name", "claim", "measured", "comparison", "threshold", "hard", "passed")
FIT_COLUMNS = ("stage", "quantity", "exponent", "residual", "n_points")
DECAY_CURVE_COLUMNS = ("t", "sup_u", "sup_diff", "sup_residual", "band_halfwidth")
CHI_COLUMNS = ("z", "t", "r", "trchi", "r_trchi")
SCATTERING_TABLE_COLUMNS = ("q", "A", "A1", "A2", "A_err")


def check_rows(report: RunReport):
    for c in report.checks:
        yield (c.stage, c.name, c.claim, c.measured, c.comparison, c.threshold, c.hard, c.passed)


def _copy_columns(store: ArtifactStore, source: str, target: str, columns, derive=None) -> None:
    """Selected columns of an earlier artifact; header-only when the artifact is absent"""
    rows = []
    if store.exists(source):
        header, records = store.read_csv(source)
        try:
            index = {name: header.index(name) for name in columns if derive is None or name in header}
        except ValueError as e:
            raise ArtifactError(f"{source}: missing column ({e})") from e
        for record in records:
            values = {name: record[j] for name, j in index.items()}
            if derive:
                values.update(derive(values))
            rows.append([values[name] for name in columns])
    store.write_csv(target, columns, rows)


def _chi_derived(values: dict) -> dict:
    # r tr chi -> 2 for the round sphere
    r, trchi = float(values["r"]), float(values["trchi"])
    return {"r_trchi": f"{r * trchi:.17g}"}


def emit_plots_data(report: RunReport, store: ArtifactStore) -> list[str]:
    """CSV bundles under plots/ for decay curves, chi profiles and scattering tables.

    Inputs are the report and artifacts already on disk, so reruns are
    byte-identical. Missing sources give header-only files.
    """
    store.write_csv("plots/checks.csv", CHECK_COLUMNS, check_rows(report))
    store.write_csv(
        "plots/fits.csv", FIT_COLUMNS, ((f.stage, f.quantity, f.exponent, f.residual, f.n_points) for f in report.fits)
    )
    _copy_columns(store, "decay_report.csv", "plots/decay_curves.csv", DECAY_CURVE_COLUMNS)
    _copy_columns(store, "frames.csv", "plots/chi_profiles.csv", CHI_COLUMNS, derive=_chi_derived)
    _copy_columns(store, "scattering.csv", "plots/scattering_table.csv", SCATTERING_TABLE_COLUMNS)
    names = [
        "plots/checks.csv",
        "plots/fits.csv",
        "plots/decay_curves.csv",
        "plots/chi_profiles.csv",
        "plots/scattering_table.csv",
    ]
    logger.info(f"Wrote {len(names)} plot bundles to {store.root / 'plots'}")
    return names


def render_summary(report: RunReport) -> str:
    template = templates.get_template("summary.md.j2")
    return template.render(report=report, failed=report.failed_checks)
