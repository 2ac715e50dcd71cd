"""Request and response bodies of the HTTP surface."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt

from app.schemas.config import HarnessSettings, SolverOptions
from app.schemas.domain import DomainSpec


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainSpec
    p: float = Field(..., ge=1.0, description="Exponent of the functional.")
    h: PositiveFloat = Field(1.0 / 64.0, description="Grid spacing.")
    options: SolverOptions = Field(default_factory=SolverOptions)


class BallRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=2, description="Dimension of the ball.")
    p: float = Field(..., ge=1.0)
    calibrate_to: Optional[PositiveFloat] = Field(None, description="Rescale the profile to this multiplier.")


class SlabRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: float = Field(..., ge=1.0)
    lam: PositiveFloat = Field(1.0, description="Multiplier (starting guess when p = 2).")


class PhaseRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: str = Field(..., description="slab_energy or ball_critical_energy.")
    parameters: dict[str, Any] = Field(default_factory=dict, description="p, lam, n, variant.")
    levels: list[float] = Field(..., min_length=1)
    resolution: int = Field(401, ge=3, le=2001)


class PhaseResponse(BaseModel):
    system: str
    parameters: dict[str, Any]
    levels: list[float]
    max_level_error: float
    curves: list[list[list[list[float]]]] = Field(..., description="Per level, polylines of (u, u') points.")


class ExitWalkRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: DomainSpec
    point: list[float] = Field(..., min_length=2)
    paths: PositiveInt = Field(10_000, le=1_000_000)
    seed: int = 0
    eps: Optional[PositiveFloat] = None
    workers: PositiveInt = Field(1, le=64)


class VerifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    suite: str = "identities"
    settings: HarnessSettings = Field(default_factory=HarnessSettings)
