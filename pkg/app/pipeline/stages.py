"""Pipeline stages. Each reads what earlier stages left in the output directory."""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from app.approximation.compare import band_grid, compare, reparam_defect, write_decay_csv
from app.approximation.qhat import solve_qhat
from app.approximation.reparametrization import REPARAM_COLUMNS, Reparametrization, reparametrization_from_reduced
from app.approximation.utilde import APPROX_COLUMNS, ApproxSolution, approx_from_rows, build_utilde
from app.asymptotics.gauge import GAUGE_COLUMNS, GaugeRun, gauge_compare
from app.asymptotics.profile import PROFILE_COLUMNS, profile_from_reduced, to_asymptotic
from app.asymptotics.scattering import ScatteringData, extract_scattering, read_scattering_csv, write_scattering_csv
from app.core.decorators import with_stage_handling
from app.core.errors import ArtifactError, BlowupDetected
from app.core.fitting import decay_exponent
from app.core.worker_pool import WorkerPool
from app.frames.analysis import analyze_bundle, analyze_frames, chi_deviation, frame_sample_times
from app.frames.chi import round_sphere_chi, trace_bundle
from app.frames.curvature import derivative_times
from app.frames.null_frame import FRAME_COLUMNS
from app.geodesics.characteristics import BICHARACTERISTIC_COLUMNS, SEED_COLUMN_COMMENT
from app.geodesics.region import RegionSpec, make_seeds
from app.geodesics.sheet import (
    CHARACTERISTIC_COLUMNS,
    SHEET_COLUMNS,
    OpticalSheet,
    build_sheet,
    eikonal_residual,
    optical_bounds,
    sheet_from_rows,
)
from app.metric.family import Direction, MetricFamily, null_form_G
from app.metric.presets import from_preset
from app.models.report import RunReport
from app.models.schemas import RunConfig
from app.pipeline import acceptance as acc
from app.pipeline.artifacts import ArtifactStore
from app.pipeline.emit import CHECK_COLUMNS, check_rows, emit_plots_data, render_summary
from app.reduced.hormander import ComparisonModel, burgers_fd_blowup, hormander_step
from app.reduced.solution import ReducedSolution, eval_reduced, integrate_reduced, read_reduced_csv, write_reduced_csv
from app.wave.field import SolutionField
from app.wave.initial_data import InitialData, mollifier
from app.wave.oracle import dalembert_radial
from app.wave.snapshot import export_csv, read_snapshot, write_snapshot
from app.wave.solver import energy_drift, solve
from config.logging_config import get_logger

logger = get_logger(__name__)

FIELD_FILE = "field.wnsf"
FIELD_CSV = "field.csv"
FIELD_CSV_STRIDE = 20
BICHAR_FILE = "bicharacteristics.csv"
SHEET_FILE = "sheet.csv"
SHEET_CHAR_FILE = "sheet_characteristics.csv"
BOUNDS_FILE = "optical_bounds.csv"
FRAMES_FILE = "frames.csv"
PROFILE_FILE = "profile.csv"
SCATTERING_FILE = "scattering.csv"
REDUCED_FILE = "reduced.csv"
BLOWUP_FILE = "blowup.csv"
REPARAM_FILE = "reparametrization.csv"
APPROX_FILE = "approximation.csv"
DECAY_FILE = "decay_report.csv"
PDEFECT_FILE = "p_defect.csv"
GAUGE_FILE = "gauge.csv"
SUMMARY_FILE = "summary.csv"
SUMMARY_MD = "summary.md"

BOUNDS_COLUMNS = ("t", "min_q_r", "max_q_t", "sup_nu", "sup_shift")
BLOWUP_COLUMNS = ("model", "s_end", "s_star_closed_form", "s_star_measured", "blew_up", "growth_rate")
# q_hat grid keeps this distance above the first reparametrization node
BAND_MARGIN = 1.0
ROTATION_ANGLE = math.pi / 6.0


@dataclass
class PipelineContext:
    """Configuration, output directory and the objects built so far"""

    cfg: RunConfig
    store: ArtifactStore
    pool: WorkerPool
    report: RunReport
    cache: dict[str, Any] = field(default_factory=dict)

    @cached_property
    def family(self) -> MetricFamily:
        m = self.cfg.metric
        return from_preset(m.preset, m.tables(), m.u_validity)

    @cached_property
    def direction(self) -> Direction:
        return Direction.from_vector(self.cfg.eikonal.omega)

    @cached_property
    def G(self) -> float:
        return null_form_G(self.family, self.direction)

    @cached_property
    def initial_data(self) -> InitialData:
        w = self.cfg.wave
        return InitialData(w.epsilon, w.R, tuple(w.u0_poly), tuple(w.u1_poly))

    @property
    def trivial_geometry(self) -> bool:
        """q = r - t exactly: flat metric or vanishing field"""
        return self.family.is_flat or self.initial_data.is_trivial

    def region(self, kappa: float | None = None) -> RegionSpec:
        e = self.cfg.eikonal
        return RegionSpec(kappa or e.kappa, e.T0, self.cfg.wave.R, self.cfg.wave.epsilon)

    def field(self) -> SolutionField:
        if "field" not in self.cache:
            if not self.store.exists(FIELD_FILE):
                raise ArtifactError(f"{FIELD_FILE} missing in {self.store.root}; run the solve stage first")
            self.cache["field"] = read_snapshot(
                self.store.root / FIELD_FILE, self.cfg.wave.R, self.cfg.wave.epsilon, self.family.c_coeffs
            )
        return self.cache["field"]

    def diag_times(self) -> np.ndarray:
        """Configured diagnostic times moved onto the nearest stored slice"""
        fld = self.field()
        wanted = self.cfg.diag_times()
        idx = np.unique([int(np.argmin(np.abs(fld.times - t))) for t in wanted])
        return fld.times[idx]

    def seeds(self, region: RegionSpec, t_max: float):
        e = self.cfg.eikonal
        return make_seeds(region, self.direction, e.dq, e.z_min, t_max=t_max)

    def stencil_dt(self) -> float | None:
        return self.cfg.eikonal.stencil_dt or None

    def sheet(self) -> OpticalSheet:
        if "sheet" not in self.cache:
            rows = self.store.read_table(SHEET_CHAR_FILE, CHARACTERISTIC_COLUMNS)
            self.cache["sheet"] = sheet_from_rows(rows, self.region(), self.diag_times(), self.stencil_dt())
        return self.cache["sheet"]

    def scattering(self) -> ScatteringData:
        if "scattering" not in self.cache:
            self.cache["scattering"] = read_scattering_csv(self.store.root / SCATTERING_FILE, self.G, self.cfg.wave.R)
        return self.cache["scattering"]

    def reduced(self) -> ReducedSolution:
        if "reduced" not in self.cache:
            self.cache["reduced"] = read_reduced_csv(self.store.root / REDUCED_FILE, self.cfg.wave.R)
        return self.cache["reduced"]

    def reparametrization(self) -> Reparametrization:
        if "rep" not in self.cache:
            self.cache["rep"] = reparametrization_from_reduced(self.reduced())
        return self.cache["rep"]

    def approx(self) -> ApproxSolution:
        if "approx" not in self.cache:
            rows = self.store.read_table(APPROX_FILE, APPROX_COLUMNS)
            self.cache["approx"] = approx_from_rows(rows, self.reparametrization(), self.reduced(), self.region())
        return self.cache["approx"]


@with_stage_handling("solve")
def stage_solve(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    data = ctx.initial_data
    fld = solve(
        ctx.family, data, cfg.wave.T_max, cfg.wave.h, diag_times=cfg.diag_times(), store_ratio=cfg.wave.store_ratio
    )
    ctx.cache["field"] = fld
    write_snapshot(fld, store.path(FIELD_FILE))
    store.mark(FIELD_FILE)
    export_csv(fld, store.path(FIELD_CSV), r_stride=FIELD_CSV_STRIDE)
    store.mark(FIELD_CSV)

    if not data.is_trivial:
        times, sups = fld.sup_history(t_min=cfg.eikonal.T0)
        report.add_fit("solve", "sup_u", decay_exponent(times, sups, quantity="sup_u"))
    if ctx.family.is_flat:
        report.add_check("solve", "energy_drift", "discrete energy is conserved by the flat scheme", energy_drift(fld), 1e-6, hard=False)
        if not data.is_trivial:
            r = fld.r_grid(fld.n_slices - 1)
            error = float(np.max(np.abs(fld.slices[-1] - dalembert_radial(data, fld.t_max, r))))
            report.add_check(
                "solve", "dalembert_error", "flat radial solve matches the d'Alembert solution to O(h^2)",
                error, 50.0 * abs(data.epsilon) * cfg.wave.h**2, hard=False,
            )


@with_stage_handling("trace")
def stage_trace(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    fld, region, diag = ctx.field(), ctx.region(), ctx.diag_times()
    seeds = ctx.seeds(region, float(diag[-1]))
    sheet = build_sheet(
        ctx.family, fld, region, seeds, diag, pool=ctx.pool,
        rtol=cfg.eikonal.rtol, null_tol=cfg.eikonal.null_tol, stencil_dt=ctx.stencil_dt(),
    )
    ctx.cache["sheet"] = sheet
    store.write_csv(
        BICHAR_FILE, BICHARACTERISTIC_COLUMNS, (row for c in sheet.curves for row in c.rows()), comment=SEED_COLUMN_COMMENT,
    )
    store.write_csv(SHEET_CHAR_FILE, CHARACTERISTIC_COLUMNS, sheet.characteristic_rows())
    store.write_csv(SHEET_FILE, SHEET_COLUMNS, sheet.rows())
    bounds = optical_bounds(sheet)
    store.write_csv(BOUNDS_FILE, BOUNDS_COLUMNS, ([b[k] for k in BOUNDS_COLUMNS] for b in bounds))

    report.add_check(
        "trace", "null_residual", "characteristics stay on the null cone g^{ab}(u) p_a p_b = 0",
        sheet.max_null_residual(), cfg.eikonal.null_tol,
    )
    sup_nu = np.array([b["sup_nu"] for b in bounds])
    if ctx.trivial_geometry:
        report.add_check("trace", "optical_shift", "q = r - t without a field", max(b["sup_shift"] for b in bounds), acc.EXACT_TOL)
        report.add_check("trace", "sup_nu", "nu = q_t + q_r vanishes without a field", float(np.max(sup_nu)), acc.EXACT_TOL)
    else:
        fit = report.add_fit("trace", "sup_nu", decay_exponent(sheet.times, sup_nu, quantity="sup_nu"))
        report.add_check("trace", "nu_decay", "nu = O(t^(-1+C eps))", fit.exponent, acc.MIN_NU_EXPONENT, ">=", hard=False)
    if sheet.stencil_dt:
        residual = eikonal_residual(sheet, ctx.family, fld)
        report.add_check(
            "trace", "eikonal_residual", "tabulated q solves the eikonal equation",
            max(r["sup_residual"] for r in residual), 1e-4, hard=False,
        )


def _frame_seeds(ctx: PipelineContext, region: RegionSpec, t_last: float):
    candidates = ctx.seeds(region, t_last)
    if not candidates:
        return []
    n = min(ctx.cfg.frames.n_seeds, len(candidates))
    picks = np.unique(np.linspace(0, len(candidates) - 1, n).round().astype(int))
    return [candidates[i] for i in picks]


@with_stage_handling("frames")
def stage_frames(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    fr = cfg.frames
    if not fr.enabled:
        logger.info("Frame analysis disabled")
        return
    fld, region = ctx.field(), ctx.region()
    t_samples = frame_sample_times(region.T0, fr.t_end, fr.sample_dt)
    step = fr.derivative_step
    # each seed keeps at least two samples with a full d/dt stencil
    seeds = _frame_seeds(ctx, region, float(t_samples[-1]) - 2.0 * (fr.sample_dt + step))
    records = analyze_frames(
        ctx.family, fld, region, seeds, t_samples, pool=ctx.pool, offset=fr.offset, basis_angle=fr.basis_angle,
        step=step, rtol=cfg.eikonal.rtol, null_tol=cfg.eikonal.null_tol, frame_tol=fr.frame_tol,
    )
    store.write_csv(
        FRAMES_FILE, ("z", *FRAME_COLUMNS), ((rec.geo.z, *row) for rec in records for row in rec.rows()),
        comment=SEED_COLUMN_COMMENT,
    )
    if not records:
        logger.warning("no frame bundles fit before frames.t_end")
        return

    report.add_check(
        "frames", "frame_defect", "null frame inner products hold along the transport",
        max(rec.max_frame_defect for rec in records), fr.frame_tol,
    )
    report.add_check("frames", "min_tr_chi", "tr chi > 0 along every traced characteristic", min(float(np.min(rec.tr_chi)) for rec in records), 0.0, ">=")
    raych = max(float(np.nanmax(np.abs(rec.raych_defect))) for rec in records)
    chi_scale = max(float(np.max(np.abs(rec.chi))) for rec in records)
    # chi from neighbours at distance offset is second order in offset
    stencil_tol = max(10.0 * fr.offset**2 * chi_scale, acc.EXACT_TOL)
    if ctx.trivial_geometry:
        report.add_check("frames", "chi_round_sphere", "chi_ab = delta_ab / r without a field", max(float(np.max(chi_deviation(rec))) for rec in records), acc.EXACT_TOL)
        report.add_check("frames", "raychaudhuri_defect", "Raychaudhuri equation holds without a field", raych, acc.EXACT_TOL)
    else:
        deviation = 0.0
        for rec in records:
            exact = np.array(
                [float(np.atleast_1d(round_sphere_chi(ctx.family, fld, float(t), float(r)))[0]) for t, r in zip(rec.t, rec.r, strict=True)]
            )
            diag = np.stack((rec.chi[:, 0, 0], rec.chi[:, 1, 1]), axis=1)
            deviation = max(deviation, float(np.max(np.abs(diag - exact[:, None]))), float(np.max(np.abs(rec.chi[:, 0, 1]))))
        report.add_check("frames", "chi_round_sphere", "chi matches the round-sphere formula for radial u", deviation, stencil_tol)
        report.add_check("frames", "raychaudhuri_defect", "Raychaudhuri equation residual", raych, stencil_tol)

    # tr chi does not depend on the choice of the transverse basis
    first = seeds[0]
    bundle = trace_bundle(
        ctx.family, fld, region, first, derivative_times(t_samples, step), offset=fr.offset,
        basis_angle=fr.basis_angle + ROTATION_ANGLE, rtol=cfg.eikonal.rtol, null_tol=cfg.eikonal.null_tol,
    )
    rotated = analyze_bundle(ctx.family, fld, bundle, t_samples, step=step, rtol=cfg.eikonal.rtol, frame_tol=fr.frame_tol)
    shift = float(np.max(np.abs(rotated.tr_chi - records[0].tr_chi)))
    report.add_check("frames", "tr_chi_rotation", "tr chi is invariant under a rotation of the seed basis", shift, stencil_tol)


def _synthetic_reduced(ctx: PipelineContext) -> ReducedSolution:
    rng = np.random.default_rng(ctx.cfg.run.seed)
    R = ctx.cfg.wave.R
    q = np.linspace(-5.0, 2.0 * R, 30)
    bump = mollifier((q + 2.0) / (R + 2.0))
    A1 = -2.0 + rng.uniform(-0.5, 0.5) * bump
    A2 = rng.uniform(-0.5, 0.5) * bump
    return ReducedSolution(q, A1, A2, ctx.G if ctx.G else 1.0, R)


@with_stage_handling("extract")
def stage_extract(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    fld, sheet = ctx.field(), ctx.sheet()
    R = cfg.wave.R
    profile = to_asymptotic(fld, sheet, q_nodes=cfg.asymptotics.q_nodes)
    store.write_csv(PROFILE_FILE, PROFILE_COLUMNS, profile.rows())
    data = extract_scattering(profile, ctx.G, ctx.pool)
    ctx.cache["scattering"] = data
    write_scattering_csv(data, store.path(SCATTERING_FILE))
    store.mark(SCATTERING_FILE)

    report.add_check(
        "extract", "product_identity", "A1 A2 = -2A within the extraction error",
        float(np.max(data.product_defect() - data.product_tolerance())), acc.EXACT_TOL,
    )
    report.add_check("extract", "A1_below_minus_one", "A1 < -1 at every node", float(np.max(data.A1)), -1.0)
    outside = data.q > R
    if outside.any():
        gap = np.maximum.reduce(
            [np.abs(data.A) - data.A_err, np.abs(data.A1 + 2.0) - data.A1_err, np.abs(data.A2) - data.A2_err]
        )
        report.add_check("extract", "exterior_values", "A = 0, A1 = -2, A2 = 0 for q > R", float(np.max(gap[outside])), acc.EXACT_TOL)
    if ctx.initial_data.is_trivial:
        worst = max(float(np.max(np.abs(data.A))), float(np.max(np.abs(data.A1 + 2.0))), float(np.max(np.abs(data.A2))))
        report.add_check("extract", "trivial_data", "zero field gives A = 0, A1 = -2, A2 = 0", worst, acc.EXACT_TOL)
    else:
        bound = np.abs(data.A1 + 2.0) - 0.5 * (1.0 + data.q**2) ** (-0.4)
        report.add_check("extract", "A1_bound", "|A1 + 2| <= 0.5 <q>^(-0.8)", float(np.max(bound)), 0.0)
        rates = data.gamma_fit[np.isfinite(data.gamma_fit) & (data.q <= R)]
        if rates.size:
            report.add_check("extract", "min_convergence_exponent", "mu U_q converges like t^(-1+C eps)", float(np.min(rates)), acc.MIN_CONVERGENCE_EXPONENT, ">=")
            report.add_check("extract", "max_convergence_exponent", "mu U_q converges like t^(-1+C eps)", float(np.max(rates)), acc.MAX_CONVERGENCE_EXPONENT)
        residual = profile.residual_sup(ctx.G)
        live = np.isfinite(residual)
        if live.sum() >= 2:
            fit = report.add_fit("extract", "reduced_residual", decay_exponent(profile.t[live], residual[live], quantity="reduced_residual"))
            report.add_check("extract", "reduced_residual_decay", "(mu, U_q) solves the reduced system up to O(t^(-1+C eps))", fit.exponent, acc.MIN_CONVERGENCE_EXPONENT, ">=", hard=False)

    # extraction applied to the exact reduced flow recovers its data
    synthetic = _synthetic_reduced(ctx)
    eps = cfg.wave.epsilon or 0.02
    s_list = eps * np.log(cfg.diag_times())
    exact = profile_from_reduced(synthetic, s_list, synthetic.q, eps)
    recovered = extract_scattering(exact, synthetic.G, ctx.pool)
    error = max(
        float(np.max(np.abs(recovered.A1 - synthetic.A1))),
        float(np.max(np.abs(recovered.A2 - synthetic.A2))),
        float(np.max(np.abs(recovered.A - synthetic.A))),
    )
    report.add_check("extract", "extraction_round_trip", "extraction recovers the data of an exact reduced flow", error, 1e-6)


def _blowup_row(model: str, s_end: float, closed: float, measured: float, blew_up: bool, growth: float) -> dict:
    return {
        "model": model, "s_end": s_end, "s_star_closed_form": closed,
        "s_star_measured": measured, "blew_up": blew_up, "growth_rate": growth,
    }


@with_stage_handling("reduced")
def stage_reduced(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    rc = cfg.reduced
    data = ctx.scattering()
    sol = data.to_reduced()
    ctx.cache["reduced"] = sol
    write_reduced_csv(sol, store.path(REDUCED_FILE))
    store.mark(REDUCED_FILE)

    rng = np.random.default_rng(cfg.run.seed)
    agreement = product_cf = drift = 0.0
    for _ in range(rc.draws):
        a1, a2 = rng.uniform(-3.0, -1.0), rng.uniform(-1.0, 1.0)
        g, s = rng.uniform(-2.0, 2.0), rng.uniform(0.1, rc.s_end)
        table = ReducedSolution(np.array([-1.0, 0.0]), np.array([a1, a1]), np.array([a2, a2]), g, 1.0)
        mu0, uq0 = eval_reduced(table, 0.0, -0.5)
        mu, uq = eval_reduced(table, s, -0.5)
        traj = integrate_reduced(a1, a2, g, s, s_eval=[0.0, s])
        scale = max(1.0, abs(float(mu[0])), abs(float(uq[0])))
        agreement = max(agreement, abs(traj.mu[-1] - float(mu[0])) / scale, abs(traj.U_q[-1] - float(uq[0])) / scale)
        product = abs(a1 * a2)
        product_cf = max(product_cf, abs(float(mu[0] * uq[0]) - float(mu0[0] * uq0[0])) / max(1.0, product))
        drift = max(drift, traj.product_drift / max(1.0, product))
    report.add_check("reduced", "closed_form_vs_rk45", "closed form solves the reduced system", agreement, acc.REDUCED_AGREEMENT)
    report.add_check("reduced", "product_closed_form", "mu U_q is constant in s (closed form)", product_cf, acc.PRODUCT_CLOSED_FORM)
    report.add_check("reduced", "product_rk45", "mu U_q is constant in s (numerical)", drift, acc.REDUCED_AGREEMENT)

    rows = []
    # Riccati: d_s V = V^2 blows up at 1 / max V
    q = np.linspace(-3.0, 3.0, 2 * (rc.n_q // 2) + 1)
    v0 = rc.riccati_value * mollifier(q / 2.0)
    expected = 1.0 / rc.riccati_value
    try:
        hormander_step(q, v0, ctx.G, ComparisonModel.RICCATI, rc.s_end)
        rows.append(_blowup_row("riccati", rc.s_end, expected, math.inf, False, math.nan))
        measured = math.inf
    except BlowupDetected as e:
        measured = e.s_star
        rows.append(_blowup_row("riccati", rc.s_end, expected, measured, True, math.nan))
    report.add_check("reduced", "riccati_blowup", "Riccati blowup at s* = 1 / max V(0)", abs(measured - expected), 1e-12)

    # Burgers: characteristics of 2 d_s V = V d_q V cross at 2 / max d_q V
    qp = 2.0 * math.pi * np.arange(rc.n_q) / rc.n_q
    vp = -rc.burgers_amplitude * np.sin(qp)
    expected = 2.0 / rc.burgers_amplitude
    s_fd = burgers_fd_blowup(qp, vp, periodic=True)
    try:
        hormander_step(qp, vp, ctx.G, ComparisonModel.BURGERS, 1.5 * expected, periodic=True)
        rows.append(_blowup_row("burgers", 1.5 * expected, expected, s_fd, False, math.nan))
    except BlowupDetected:
        rows.append(_blowup_row("burgers", 1.5 * expected, expected, s_fd, True, math.nan))
    report.add_check("reduced", "burgers_blowup", "Burgers gradient catastrophe at 2 / max d_q V(0)", abs(s_fd - expected) / expected, acc.BURGERS_AGREEMENT)

    # the geometric model exists globally; its slopes grow at most exponentially
    if data.q.size >= 5:
        qg, vg = data.q, data.A2
    else:
        qg, vg = q, 0.1 * mollifier(q / 2.0)
    result = hormander_step(qg, vg, ctx.G, ComparisonModel.GEOMETRIC_QWE, rc.s_end)
    growth = result.growth.slope if result.growth else 0.0
    rows.append(_blowup_row("geometric_qwe", rc.s_end, math.inf, math.inf, False, growth))
    report.add_fit("reduced", "geometric_qwe_slope_growth", result.growth)
    bound = 0.5 * float(np.max(np.abs(ctx.G * data.A))) + acc.GROWTH_SLACK
    report.add_check("reduced", "geometric_growth", "geometric reduced model grows at most exponentially", growth, bound, hard=False)

    store.write_csv(BLOWUP_FILE, BLOWUP_COLUMNS, ([r[k] for k in BLOWUP_COLUMNS] for r in rows))
    report.blowups = rows


@with_stage_handling("approx")
def stage_approx(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    ap = cfg.approximation
    R = cfg.wave.R
    sol = ctx.reduced()
    rep = ctx.reparametrization()
    store.write_csv(REPARAM_FILE, REPARAM_COLUMNS, rep.rows())

    rng = np.random.default_rng(cfg.run.seed)
    q = rng.uniform(max(rep.q[0], -20.0), 2.0 * R, 50)
    report.add_check("approx", "F_round_trip", "F_hat(F(q)) = q", float(np.max(np.abs(rep.F_hat(rep.F_of(q)) - q))), acc.ROUND_TRIP_TOL)
    q_out = np.linspace(R, 3.0 * R, 21)[1:]
    report.add_check("approx", "F_exterior", "F(q) = q for q > R", float(np.max(np.abs(rep.F_of(q_out) - q_out))), acc.EXACT_TOL)
    inner = rep.q < 2.0 * R
    bounds = np.maximum(2.0 * (rep.q - R) - rep.F, rep.F - 2.0 * (rep.q + R) / 3.0)[inner]
    report.add_check("approx", "F_bounds", "2(q - R) <= F(q) <= 2(q + R)/3 for q < 2R", float(np.max(bounds)), acc.EXACT_TOL, hard=False)

    fld, region = ctx.field(), ctx.region()
    grid = band_grid(fld, region, ctx.diag_times(), ap.gamma, q_min=float(rep.q[0]) + BAND_MARGIN)
    table = solve_qhat(rep, sol.G, region, grid, ctx.pool)
    approx = build_utilde(rep, sol, table, region, ctx.pool)
    ctx.cache["approx"] = approx
    store.write_csv(APPROX_FILE, APPROX_COLUMNS, approx.rows())

    report.add_check("approx", "route_defect", "U_tilde(s, F_hat(q_hat)) = U_hat(s, q_hat)", approx.route_defect(), acc.ROUTE_TOL)
    steps = [float(np.min(np.diff(qh))) for qh in table.qhat if qh.size > 1]
    if steps:
        report.add_check("approx", "qhat_monotone", "q_hat strictly increasing in r", min(steps), 0.0, ">=")
    shift, outer_u = 0.0, 0.0
    for i, t in enumerate(table.times):
        far = table.r[i] - t > R
        if far.any():
            shift = max(shift, float(np.max(np.abs(table.qhat[i][far] - (table.r[i][far] - t)))))
            outer_u = max(outer_u, float(np.max(np.abs(approx.u_tilde[i][far]))))
    report.add_check("approx", "qhat_exterior", "q_hat = r - t and u_tilde = 0 for r - t > R", max(shift, outer_u), acc.EXACT_TOL)
    if ctx.initial_data.is_trivial:
        worst = max((float(np.max(np.abs(u))) for u in approx.u_tilde if u.size), default=0.0)
        report.add_check("approx", "trivial_utilde", "zero scattering data gives u_tilde = 0", worst, acc.EXACT_TOL)
    else:
        sup_nu = table.sup_nu()
        if np.any(sup_nu > 0.0):
            fit = report.add_fit("approx", "nu_hat", decay_exponent(table.times, sup_nu, quantity="nu_hat"))
            report.add_check("approx", "nu_hat_decay", "q_hat_t + q_hat_r = O(t^(-1+C eps))", fit.exponent, acc.MIN_NU_EXPONENT, ">=", hard=False)


@with_stage_handling("compare")
def stage_compare(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    ap = cfg.approximation
    approx = ctx.approx()
    decay = compare(ctx.field(), approx, ap.gamma, ap.residual_stride, ap.residual_delta, ap.fit_t_min)
    write_decay_csv(decay, store.path(DECAY_FILE))
    store.mark(DECAY_FILE)
    for name, fit in decay.fits.items():
        report.add_fit("compare", name, fit)

    if ctx.initial_data.is_trivial:
        report.add_check("compare", "trivial_difference", "u - u_tilde reduces to u", float(np.max(np.abs(decay.sup_diff - decay.sup_u))), acc.EXACT_TOL)
        return
    # flat background: u - u_tilde is extraction noise without a decay rate
    hard = not ctx.family.is_flat
    report.add_check("compare", "decay_gap", "|u - u_tilde| decays faster than |u| by t^(-1+C eps)", decay.exponent_gap, acc.MIN_DECAY_GAP, ">=", hard=hard)
    report.add_check("compare", "residual_decay", "u_tilde solves the wave equation up to O(eps t^(-3+C eps))", decay.fits["sup_residual"].slope, acc.MIN_RESIDUAL_EXPONENT, ">=", hard=hard)

    t, sup_p, fit = reparam_defect(ctx.sheet(), approx, ap.gamma)
    store.write_csv(PDEFECT_FILE, ("t", "sup_p_weighted"), zip(t, sup_p, strict=True))
    report.add_fit("compare", "p_defect", fit)
    if np.any(sup_p > 0.0):
        report.add_check("compare", "p_defect_decay", "|F(q) - q_hat| / <r - t> = O(t^(-1+C eps))", fit.slope, acc.MIN_NU_EXPONENT, ">=", hard=False)


@with_stage_handling("gauge")
def stage_gauge(ctx: PipelineContext) -> None:
    cfg, store, report = ctx.cfg, ctx.store, ctx.report
    fld, diag = ctx.field(), ctx.diag_times()
    runs = []
    for kappa in cfg.gauge.kappas:
        region = ctx.region(kappa)
        sheet = build_sheet(
            ctx.family, fld, region, ctx.seeds(region, float(diag[-1])), diag, pool=ctx.pool,
            rtol=cfg.eikonal.rtol, null_tol=cfg.eikonal.null_tol,
        )
        profile = to_asymptotic(fld, sheet, q_nodes=cfg.asymptotics.q_nodes)
        runs.append(GaugeRun(region, extract_scattering(profile, ctx.G, ctx.pool), sheet))
    comparison = gauge_compare(runs[0], runs[1])
    store.write_csv(GAUGE_FILE, GAUGE_COLUMNS, comparison.rows())
    report.add_check(
        "gauge", "gauge_defect", "A(q) = A_bar(q_bar_inf(q)) across initialization cones",
        float(np.max(comparison.defect)), acc.GAUGE_TOL,
    )


STAGE_FUNCTIONS = {
    "solve": stage_solve,
    "trace": stage_trace,
    "frames": stage_frames,
    "extract": stage_extract,
    "reduced": stage_reduced,
    "approx": stage_approx,
    "compare": stage_compare,
    "gauge": stage_gauge,
}


@with_stage_handling("report")
def stage_report(ctx: PipelineContext) -> None:
    store, report = ctx.store, ctx.report
    store.write_csv(SUMMARY_FILE, CHECK_COLUMNS, check_rows(report))
    emit_plots_data(report, store)
    report.artifacts = sorted({*report.artifacts, *store.written, SUMMARY_MD})
    store.write_text(SUMMARY_MD, render_summary(report))


STAGE_FUNCTIONS["report"] = stage_report
