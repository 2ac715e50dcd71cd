"""Report schemas emitted by the solvers and the verification harness."""

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from app.schemas.config import HarnessSettings


class Relation(str, Enum):
    """Expected relation between the two sides of a claim."""

    LT = "<"
    LE = "<="
    EQ = "="
    GE = ">="
    GT = ">"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def normalized_margin(lhs: float, rhs: float) -> float:
    """Signed slack (lhs - rhs) / max(|lhs|, |rhs|)."""

    if math.isnan(lhs) or math.isnan(rhs):
        return math.nan
    scale = max(abs(lhs), abs(rhs))
    if scale == 0.0:
        return 0.0
    if not math.isfinite(scale):
        return math.nan
    return (lhs - rhs) / scale


def judge(relation: Relation, margin: float, tolerance: float) -> Verdict:
    """Decide a claim from its normalized margin.

    Strict relations whose margin sits inside the tolerance band are
    inconclusive rather than failed.
    """

    if math.isnan(margin):
        return Verdict.FAIL
    if relation is Relation.GE:
        return Verdict.PASS if margin >= -tolerance else Verdict.FAIL
    if relation is Relation.LE:
        return Verdict.PASS if margin <= tolerance else Verdict.FAIL
    if relation is Relation.EQ:
        return Verdict.PASS if abs(margin) <= tolerance else Verdict.FAIL
    if abs(margin) <= tolerance:
        return Verdict.INCONCLUSIVE
    if relation is Relation.GT:
        return Verdict.PASS if margin > tolerance else Verdict.FAIL
    return Verdict.PASS if margin < -tolerance else Verdict.FAIL


class CheckReport(BaseModel):
    """One verified claim. Margin, verdict and pass flag are derived from the numbers."""

    model_config = ConfigDict(extra="forbid")

    claim_id: str = Field(..., description="Stable identifier of the verified claim.")
    inputs: dict[str, Any] = Field(default_factory=dict, description="Parameters of the check.")
    lhs: float
    rhs: float
    relation: Relation
    tolerance: float = Field(0.0, ge=0.0, description="Band on the normalized margin.")
    notes: str = ""
    extras: dict[str, Any] = Field(default_factory=dict, description="Auxiliary measurements.")

    @computed_field  # type: ignore[prop-decorator]
    @property
    def margin(self) -> float:
        return normalized_margin(self.lhs, self.rhs)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def verdict(self) -> Verdict:
        return judge(self.relation, self.margin, self.tolerance)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def summary_line(self) -> str:
        return (
            f"[{self.verdict.value.upper():>12}] {self.claim_id}: "
            f"{self.lhs:.10g} {self.relation.value} {self.rhs:.10g} (margin {self.margin:+.3e})"
        )


class SolveReport(BaseModel):
    """JSON form of a grid solve."""

    model_config = ConfigDict(populate_by_name=True)

    domain: dict[str, Any]
    p: float
    h: float
    lambda_: float = Field(..., alias="lambda")
    c_p: float
    r_p: float
    u_max: float
    residual: float
    iterations: int
    linear_iterations: int
    volume: float
    lemma_defect: float
    product: float = Field(..., description="c_p * r_p as computed.")
    calibrated_lambda: float
    method: str


class RadialReport(BaseModel):
    """JSON form of a slab or ball profile."""

    model_config = ConfigDict(populate_by_name=True)

    system: str
    n: int
    p: float
    lambda_: float = Field(..., alias="lambda")
    c_p: float
    u_max: float
    first_zero: float
    boundary_residual: float
    richardson_error: float
    samples: int


class ExitEstimateReport(BaseModel):
    """Walk-on-spheres estimate of the mean exit time at one point."""

    point: list[float]
    mean: float
    std_error: float
    paths: int
    seed: int
    eps: float
    workers: int
    generator: str
    convention: str = Field(
        "generator 1/2 Laplacian: E[tau] solves Laplace(w) + 2 = 0",
        description="Brownian normalization used for the estimate.",
    )


class LevelSetManifest(BaseModel):
    """Index of the curve files written for one phase portrait."""

    system: str
    parameters: dict[str, Any]
    levels: list[float]
    curve_files: list[str]
    point_counts: list[int]
    max_level_error: float
    svg_file: Optional[str] = None


class EnvironmentBlock(BaseModel):
    settings: HarnessSettings
    versions: dict[str, str] = Field(default_factory=dict)


class AggregateReport(BaseModel):
    """Sorted collection of check reports for one suite run."""

    suite: str
    environment: EnvironmentBlock
    checks: list[CheckReport]

    @computed_field  # type: ignore[prop-decorator]
    @property
    def all_passed(self) -> bool:
        return all(check.verdict is not Verdict.FAIL for check in self.checks)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def counts(self) -> dict[str, int]:
        tally = {verdict.value: 0 for verdict in Verdict}
        for check in self.checks:
            tally[check.verdict.value] += 1
        return tally
