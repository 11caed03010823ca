"""Run configuration: one pydantic model per INI section."""

import configparser
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigError

STAGES = ("solve", "trace", "frames", "extract", "reduced", "approx", "compare", "gauge", "report")


def _split(value) -> list[str]:
    if isinstance(value, str):
        return [p for p in (x.strip() for x in value.replace(";", ",").split(",")) if p]
    return list(value)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RunSection(_Section):
    name: str = "default"
    stages: list[str] = Field(default_factory=lambda: list(STAGES))
    seed: int = Field(default=20240611, ge=0)
    workers: int = Field(default=4, ge=1)
    out: str = "runs/latest"
    enforce_acceptance: bool = True

    @field_validator("stages", mode="before")
    @classmethod
    def parse_stages(cls, v):
        stages = _split(v)
        if stages == ["all"]:
            return list(STAGES)
        unknown = sorted(set(stages) - set(STAGES))
        if unknown:
            raise ValueError(f"unknown stages {unknown}")
        return [s for s in STAGES if s in stages]


class MetricSection(_Section):
    preset: str = "isotropic:c=1+u"
    u_validity: float = Field(default=0.2, gt=0.0)
    g1: str | None = None
    g2: str | None = None
    g3: str | None = None
    g4: str | None = None

    def tables(self) -> dict[str, str]:
        return {k: v for k, v in (("g1", self.g1), ("g2", self.g2), ("g3", self.g3), ("g4", self.g4)) if v}


class WaveSection(_Section):
    epsilon: float = Field(default=0.02, ge=0.0, le=0.1)
    R: float = Field(default=1.0, gt=0.0)
    h: float = Field(default=0.05, gt=0.0)
    T_max: float = Field(default=2000.0, gt=0.0)
    u0_poly: list[float] = Field(default_factory=lambda: [1.0])
    u1_poly: list[float] = Field(default_factory=lambda: [0.0])
    store_ratio: float = Field(default=1.05, gt=1.0)

    @field_validator("u0_poly", "u1_poly", mode="before")
    @classmethod
    def parse_poly(cls, v):
        return [float(x) for x in _split(v)]


class EikonalSection(_Section):
    T0: float = Field(default=10.0, ge=1.0)
    kappa: float = Field(default=0.5, gt=0.0, lt=1.0)
    dq: float = Field(default=0.05, gt=0.0)
    z_min: float = -50.0
    t_first: float = Field(default=200.0, gt=0.0)
    t_ratio: float = Field(default=1.2, gt=1.0)
    rtol: float = Field(default=1e-10, gt=0.0)
    null_tol: float = Field(default=1e-8, gt=0.0)
    stencil_dt: float = Field(default=0.0, ge=0.0)
    omega: list[float] = Field(default_factory=lambda: [0.0, 0.0, 1.0])

    @field_validator("omega", mode="before")
    @classmethod
    def parse_omega(cls, v):
        values = [float(x) for x in (v.split() if isinstance(v, str) else v)]
        if len(values) != 3 or np.linalg.norm(values) == 0.0:
            raise ValueError("omega needs three components, not all zero")
        return values


class FramesSection(_Section):
    enabled: bool = True
    n_seeds: int = Field(default=8, ge=1)
    offset: float = Field(default=1e-2, gt=0.0)
    basis_angle: float = 0.0
    frame_tol: float = Field(default=1e-6, gt=0.0)
    sample_dt: float = Field(default=1.0, gt=0.0)
    derivative_step: float = Field(default=0.1, gt=0.0)
    t_end: float = Field(default=60.0, gt=0.0)


class AsymptoticsSection(_Section):
    q_nodes: list[float] | None = None

    @field_validator("q_nodes", mode="before")
    @classmethod
    def parse_nodes(cls, v):
        if v is None or (isinstance(v, str) and not v.strip()):
            return None
        nodes = sorted(float(x) for x in _split(v))
        return nodes


class ReducedSection(_Section):
    s_end: float = Field(default=20.0, gt=0.0)
    draws: int = Field(default=100, ge=1)
    burgers_amplitude: float = Field(default=0.1, gt=0.0)
    riccati_value: float = Field(default=0.5, gt=0.0)
    n_q: int = Field(default=256, ge=16)


class ApproximationSection(_Section):
    gamma: float = Field(default=0.5, gt=0.0, lt=1.0)
    residual_stride: int = Field(default=4, ge=1)
    residual_delta: float = Field(default=0.05, gt=0.0)
    fit_t_min: float = Field(default=200.0, ge=0.0)


class GaugeSection(_Section):
    kappas: list[float] = Field(default_factory=lambda: [0.4, 0.6])

    @field_validator("kappas", mode="before")
    @classmethod
    def parse_kappas(cls, v):
        values = [float(x) for x in _split(v)]
        if len(values) != 2 or not all(0.0 < k < 1.0 for k in values):
            raise ValueError("gauge needs two kappa values in (0, 1)")
        return values


class RunConfig(_Section):
    run: RunSection = Field(default_factory=RunSection)
    metric: MetricSection = Field(default_factory=MetricSection)
    wave: WaveSection = Field(default_factory=WaveSection)
    eikonal: EikonalSection = Field(default_factory=EikonalSection)
    frames: FramesSection = Field(default_factory=FramesSection)
    asymptotics: AsymptoticsSection = Field(default_factory=AsymptoticsSection)
    reduced: ReducedSection = Field(default_factory=ReducedSection)
    approximation: ApproximationSection = Field(default_factory=ApproximationSection)
    gauge: GaugeSection = Field(default_factory=GaugeSection)

    @model_validator(mode="after")
    def check_horizons(self):
        if self.eikonal.t_first <= self.eikonal.T0:
            raise ValueError("the first diagnostic time must lie after T0")
        if self.eikonal.t_first >= self.wave.T_max:
            raise ValueError("the first diagnostic time must lie before T_max")
        if self.frames.t_end > self.wave.T_max:
            raise ValueError("frames.t_end must not exceed T_max")
        return self

    def diag_times(self) -> np.ndarray:
        """Geometric diagnostic sequence t_first * t_ratio^k up to T_max - 1"""
        e = self.eikonal
        n = int(np.floor(np.log((self.wave.T_max - 1.0) / e.t_first) / np.log(e.t_ratio) + 1e-9))
        return e.t_first * e.t_ratio ** np.arange(n + 1)

    def with_overrides(self, out: str | None = None, workers: int | None = None, seed: int | None = None) -> "RunConfig":
        updates = {k: v for k, v in (("out", out), ("workers", workers), ("seed", seed)) if v is not None}
        if not updates:
            return self
        try:
            run = RunSection.model_validate({**self.run.model_dump(), **updates})
        except ValidationError as e:
            raise ConfigError(f"invalid command-line override: {e}") from e
        return self.model_copy(update={"run": run})


def load_run_config(path: str | Path | None) -> RunConfig:
    """Read an INI file into a RunConfig; any problem is a ConfigError"""
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser(interpolation=None)
    # keys such as T0 and R are case-sensitive
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    unknown = set(parser.sections()) - set(RunConfig.model_fields)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    payload = {name: dict(parser.items(name)) for name in parser.sections()}
    return parse_run_config(payload)


def parse_run_config(payload: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e
