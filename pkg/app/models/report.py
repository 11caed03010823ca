"""Report schema: acceptance checks and fitted exponents of one run."""

import math

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_serializer


class CheckRow(BaseModel):
    """One acceptance check: the claim it tests, the measured value and the verdict"""

    model_config = ConfigDict(frozen=True)

    stage: str
    name: str
    claim: str
    measured: float
    threshold: float
    comparison: str = "<="
    hard: bool = True

    @computed_field
    @property
    def passed(self) -> bool:
        if math.isnan(self.measured):
            return False
        if self.comparison == "<=":
            return self.measured <= self.threshold
        return self.measured >= self.threshold

    @field_serializer("measured", "threshold")
    def _finite(self, value: float):
        return value if math.isfinite(value) else str(value)


class FitRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: str
    quantity: str
    exponent: float
    residual: float
    n_points: int

    @field_serializer("exponent", "residual")
    def _finite(self, value: float):
        return value if math.isfinite(value) else str(value)


class RunReport(BaseModel):
    run_name: str
    seed: int
    stages: list[str] = Field(default_factory=list)
    checks: list[CheckRow] = Field(default_factory=list)
    fits: list[FitRow] = Field(default_factory=list)
    blowups: list[dict[str, float | str | bool]] = Field(default_factory=list)
    artifacts: list[str] = Field(default_factory=list)
    exit_code: int = 0
    error: str | None = None

    @property
    def failed_checks(self) -> list[CheckRow]:
        return [c for c in self.checks if c.hard and not c.passed]

    def add_check(self, stage: str, name: str, claim: str, measured: float, threshold: float, comparison: str = "<=", hard: bool = True) -> CheckRow:
        row = CheckRow(
            stage=stage, name=name, claim=claim, measured=float(measured),
            threshold=float(threshold), comparison=comparison, hard=hard,
        )
        self.checks = [c for c in self.checks if not (c.stage == stage and c.name == name)] + [row]
        return row

    def add_fit(self, stage: str, quantity: str, fit) -> FitRow:
        row = FitRow(stage=stage, quantity=quantity, exponent=float(fit.slope), residual=float(fit.residual), n_points=int(fit.n_points))
        self.fits = [f for f in self.fits if not (f.stage == stage and f.quantity == quantity)] + [row]
        return row
