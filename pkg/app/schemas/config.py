"""Option models shared by the solvers, the verification harness and the CLI."""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt


class IterationMethod(str, Enum):
    """Outer iteration used by the eigen solver."""

    FIXED_POINT = "fixed_point"
    GRADIENT_FLOW = "gradient_flow"


class LinearSolver(str, Enum):
    """Inner solver for the discrete Poisson problems."""

    CG = "cg"
    DIRECT = "direct"


class SolverOptions(BaseModel):
    """Tolerances and switches of a grid solve."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tol: PositiveFloat = Field(1e-8, description="Relative spread of Phi_p over the last ten iterates.")
    residual_tol: PositiveFloat = Field(1e-6, description="Relative PDE residual threshold.")
    max_iter: PositiveInt = Field(5000, description="Outer iteration cap.")
    seed: Optional[int] = Field(
        None, description="RNG seed for a perturbed positive start; None starts from the torsion function."
    )
    method: IterationMethod = IterationMethod.FIXED_POINT
    step: float = Field(0.5, gt=0.0, le=1.0, description="Damping of the gradient-flow update.")
    linear_solver: LinearSolver = LinearSolver.CG
    cg_tol: PositiveFloat = Field(1e-10, description="Relative residual of every inner Poisson solve.")
    calibration_lambda: PositiveFloat = Field(
        2.0, description="Multiplier the calibrated solution is rescaled to (p != 2)."
    )


class HarnessSettings(BaseModel):
    """Environment of a verification run; echoed into every aggregate report."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    h: PositiveFloat = Field(1.0 / 64.0, description="Grid spacing for grid-based checks.")
    solver: SolverOptions = Field(default_factory=SolverOptions)
    slack: PositiveFloat = Field(0.02, description="Relative slack of the one-sided bounds.")
    seed: int = Field(20240601, description="Seed for Monte Carlo and seed-independence checks.")
    paths: PositiveInt = Field(100_000, description="Walk-on-spheres paths per point.")
    workers: PositiveInt = Field(1, description="Thread fan-out of independent checks and walks.")


class Command(str, Enum):
    SOLVE = "solve"
    RADIAL = "radial"
    PHASE = "phase"
    VERIFY = "verify"
    EXITWALK = "exitwalk"
    SWEEP = "sweep"
    SERVE = "serve"


class RunConfig(BaseModel):
    """One CLI invocation, built from the parsed arguments."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    domain_path: Optional[Path] = Field(None, description="JSON domain file.")
    p: Optional[float] = Field(None, ge=1.0)
    p_list: list[float] = Field(default_factory=list, description="p values of a sweep.")
    r_list: list[float] = Field(default_factory=list, description="Scale factors of a sweep.")
    h: PositiveFloat = 1.0 / 64.0
    solver: SolverOptions = Field(default_factory=SolverOptions)
    seed: int = 0
    out_dir: Optional[Path] = Field(None, description="Overrides OUTPUT_DIR.")
    emit_svg: bool = False
    workers: PositiveInt = 1
    log_level: str = "INFO"

    # radial / phase
    system: Optional[str] = None
    calibrate: bool = Field(False, description="Rescale a ball profile to lam.")
    n: Optional[int] = Field(None, ge=1)
    lam: PositiveFloat = 1.0
    levels: list[float] = Field(default_factory=list)
    variant: str = "conserved"

    # verify / exitwalk
    suite: str = "all"
    points: list[list[float]] = Field(default_factory=list)
    paths: PositiveInt = 100_000
    eps: Optional[PositiveFloat] = None
    compare: bool = Field(False, description="Check exit times against the grid torsion function.")

    # serve
    host: str = "127.0.0.1"
    port: PositiveInt = 8000
