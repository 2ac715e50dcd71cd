"""Positive minimizers of Phi_p on grid domains, C_p, R_p and derived diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import ndimage

from app.schemas.config import IterationMethod, SolverOptions
from app.schemas.domain import DomainSpec
from app.schemas.report import CheckReport, Relation, SolveReport
from app.services.errors import (
    InvalidInputError,
    NoConvergenceError,
    NonConvexDomainRefusedError,
    NonPositiveIterateError,
)
from app.services.field import GridField, dirichlet_energy, lp_norm_p, solve_linear
from app.services.geometry import GridMask, rasterize, volume

logger = logging.getLogger(__name__)

__all__ = [
    "Admissibility",
    "Regime",
    "SolveResult",
    "admissibility",
    "log_concavity_check",
    "pde_residual",
    "rescale_amplitude",
    "ring_deviation",
    "solve_domain",
    "solve_eigen",
    "solve_torsion",
]

_CONVEX_KINDS = frozenset({"disk", "rectangle"})

# Phi_p must stay within tol over this many trailing iterates.
STABLE_WINDOW = 10


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class Admissibility:
    """Position of p relative to the critical Sobolev exponent 2n/(n-2)."""

    regime: Regime
    critical_exponent: float


def admissibility(n: int, p: float) -> Admissibility:
    if n < 2:
        raise InvalidInputError(f"admissibility needs n >= 2, got {n}")
    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    if n == 2:
        return Admissibility(Regime.SUBCRITICAL, math.inf)
    critical = 2.0 * n / (n - 2)
    if math.isclose(p, critical, rel_tol=1e-12):
        regime = Regime.CRITICAL
    elif p < critical:
        regime = Regime.SUBCRITICAL
    else:
        regime = Regime.SUPERCRITICAL
    return Admissibility(regime, critical)


@dataclass(frozen=True)
class SolveResult:
    """Converged grid solution.

    ``u`` is normalized to ∫u^p = 1, so ``lam`` is its Dirichlet energy and equals
    ``c_p``. ``calibrated_u`` is the rescaled copy solving Δv + Λ' v^{p-1} = 0 with
    ``calibrated_lambda`` = Λ'; ``u_max`` is read from it.
    """

    u: GridField
    lam: float
    c_p: float
    r_p: float
    u_max: float
    pde_residual: float
    iterations: int
    p: float
    calibrated_u: GridField
    calibrated_lambda: float
    linear_iterations: int = 0
    lemma_defect: float = 0.0
    lagrange_lambda: float = math.nan
    method: str = "torsion"
    phi_history: tuple[float, ...] = field(default_factory=tuple)

    @property
    def mask(self) -> GridMask:
        return self.u.mask

    @property
    def product(self) -> float:
        return self.c_p * self.r_p

    @property
    def volume(self) -> float:
        return volume(self.mask)

    def to_report(self) -> SolveReport:
        source = self.mask.source
        return SolveReport(
            domain={} if source is None else source.model_dump(mode="json"),
            p=self.p,
            h=self.mask.h,
            lambda_=self.lam,
            c_p=self.c_p,
            r_p=self.r_p,
            u_max=self.u_max,
            residual=self.pde_residual,
            iterations=self.iterations,
            linear_iterations=self.linear_iterations,
            volume=self.volume,
            lemma_defect=self.lemma_defect,
            product=self.product,
            calibrated_lambda=self.calibrated_lambda,
            method=self.method,
        )


def pde_residual(u: GridField, lam: float, p: float) -> float:
    """‖Δu + Λu^{p-1}‖ / ‖Λu^{p-1}‖ in the discrete 2-norm."""

    source = lam * np.power(u.values, p - 1.0)
    defect = u.mask.stiffness @ u.values - source
    return float(np.linalg.norm(defect) / np.linalg.norm(source))


def rescale_amplitude(u: GridField, lam: float, p: float, k: float) -> tuple[GridField, float]:
    """k·u solves the equation with multiplier k^{2-p}Λ."""

    return u * k, lam * k ** (2.0 - p)


def _normalize(values: np.ndarray, p: float, h: float) -> np.ndarray:
    return values / (float(np.sum(values**p)) * h * h) ** (1.0 / p)


def solve_torsion(mask: GridMask, options: Optional[SolverOptions] = None) -> SolveResult:
    """Linear solve of Δu + 2 = 0; C_1 = 4/P with P = 2∫u."""

    options = options or SolverOptions()
    torsion, linear_iterations = solve_linear(
        mask, np.full(mask.cell_count, 2.0), options.cg_tol, method=options.linear_solver.value
    )
    calibrated = GridField(mask, torsion)
    integral = lp_norm_p(calibrated, 1.0)
    rigidity = 2.0 * integral
    u = GridField(mask, torsion / integral)
    lam = dirichlet_energy(u)
    lam_pde = 2.0 / integral
    logger.info("solve_torsion: %d cells, P=%.10g, %d CG iterations", mask.cell_count, rigidity, linear_iterations)
    return SolveResult(
        u=u,
        lam=lam,
        c_p=4.0 / rigidity,
        r_p=rigidity,
        u_max=calibrated.max,
        pde_residual=pde_residual(calibrated, 2.0, 1.0),
        iterations=1,
        p=1.0,
        calibrated_u=calibrated,
        calibrated_lambda=2.0,
        linear_iterations=linear_iterations,
        lemma_defect=abs(lam - lam_pde) / lam,
        lagrange_lambda=lam_pde,
        method="torsion",
        phi_history=(lam,),
    )


def _seed_values(mask: GridMask, options: SolverOptions) -> np.ndarray:
    seed, _ = solve_linear(mask, np.ones(mask.cell_count), options.cg_tol, method=options.linear_solver.value)
    if options.seed is not None:
        rng = np.random.default_rng(options.seed)
        seed = seed * rng.uniform(0.5, 1.5, size=seed.size)
    return seed


def solve_eigen(mask: GridMask, p: float, options: Optional[SolverOptions] = None) -> SolveResult:
    """Minimize Phi_p by the normalized inverse iteration u <- N_p(G(u^{p-1})).

    For p = 2 this is inverse power iteration. ``options.method`` switches to the
    damped update u <- N_p((1-τ)u + τΛG(u^{p-1})).
    """

    options = options or SolverOptions()
    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    admissibility(2, p)
    h = mask.h
    method = options.linear_solver.value
    damped = options.method is IterationMethod.GRADIENT_FLOW

    u = _normalize(_seed_values(mask, options), p, h)
    phi_prev: Optional[float] = None
    lam_prev: Optional[float] = None
    history: list[float] = []
    linear_total = 0

    for iteration in range(1, options.max_iter + 1):
        warm = None if lam_prev is None else u / lam_prev
        w, linear_iterations = solve_linear(mask, np.power(u, p - 1.0), options.cg_tol, method=method, x0=warm)
        linear_total += linear_iterations
        if w.min() <= 0.0:
            raise NonPositiveIterateError(f"iterate lost positivity at step {iteration} (min {w.min():.3e})")

        lam_pde = 1.0 / (float(np.sum(w**p)) * h * h) ** (1.0 / p)
        candidate = w * lam_pde
        if damped:
            candidate = _normalize((1.0 - options.step) * u + options.step * candidate, p, h)
        if candidate.min() <= 0.0:
            raise NonPositiveIterateError(f"iterate lost positivity at step {iteration}")

        u = candidate
        current = GridField(mask, u)
        phi = dirichlet_energy(current)
        residual = pde_residual(current, phi, p)
        history.append(phi)
        change = math.inf if phi_prev is None else abs(phi - phi_prev) / phi
        window = history[-STABLE_WINDOW:]
        spread = (max(window) - min(window)) / phi if len(window) == STABLE_WINDOW else math.inf
        logger.debug(
            "solve_eigen p=%g step %d: phi=%.14g change=%.3e spread=%.3e residual=%.3e cg=%d",
            p, iteration, phi, change, spread, residual, linear_iterations,
        )
        if spread < options.tol and residual < options.residual_tol:
            break
        phi_prev, lam_prev = phi, lam_pde
    else:
        raise NoConvergenceError(
            f"solve_eigen did not converge in {options.max_iter} iterations for p={p}"
        )

    norm_p = lp_norm_p(current, p)
    lemma_defect = abs(phi - lam_pde * norm_p ** ((p - 2.0) / p)) / phi
    c_p = phi * norm_p ** ((p - 2.0) / p)
    r_p = 4.0 / phi * norm_p ** ((2.0 - p) / p)

    if p == 2.0:
        scale, calibrated_lambda = 1.0, phi
    else:
        calibrated_lambda = options.calibration_lambda
        scale = (calibrated_lambda / phi) ** (1.0 / (2.0 - p))
    calibrated = current * scale

    logger.info(
        "solve_eigen: p=%g, %d cells, C_p=%.10g after %d iterations (%d inner)",
        p, mask.cell_count, c_p, iteration, linear_total,
    )
    return SolveResult(
        u=current,
        lam=phi,
        c_p=c_p,
        r_p=r_p,
        u_max=calibrated.max,
        pde_residual=residual,
        iterations=iteration,
        p=float(p),
        calibrated_u=calibrated,
        calibrated_lambda=calibrated_lambda,
        linear_iterations=linear_total,
        lemma_defect=lemma_defect,
        lagrange_lambda=lam_pde,
        method=options.method.value,
        phi_history=tuple(history),
    )


def solve_domain(
    domain: DomainSpec,
    p: float,
    h: float,
    options: Optional[SolverOptions] = None,
) -> SolveResult:
    """Rasterize and solve; p = 1 goes through the direct torsion solve."""

    mask = rasterize(domain, h)
    if p == 1.0:
        return solve_torsion(mask, options)
    return solve_eigen(mask, p, options)


def ring_deviation(result: SolveResult) -> float:
    """Largest spread of u over nodes sharing one exact radius, relative to max u.

    Meaningful for domains centred at the origin.
    """

    nodes = result.mask.node_indices
    radius2 = nodes[:, 0] ** 2 + nodes[:, 1] ** 2
    values = result.u.values
    order = np.argsort(radius2, kind="stable")
    keys, starts = np.unique(radius2[order], return_index=True)
    spreads = np.maximum.reduceat(values[order], starts) - np.minimum.reduceat(values[order], starts)
    return float(spreads.max() / values.max())


def log_concavity_check(result: SolveResult, margin_cells: int = 2) -> CheckReport:
    """Midpoint convexity of -log u on axis and diagonal triples away from the boundary."""

    mask = result.mask
    source = mask.source
    kind = None if source is None else source.kind
    if kind not in _CONVEX_KINDS:
        raise NonConvexDomainRefusedError(f"log-concavity is only checked on disks and rectangles, got {kind}")

    depth = ndimage.distance_transform_edt(mask.occupancy)
    eligible = depth >= margin_cells + 1
    grid = result.u.to_grid()
    potential = np.full(grid.shape, np.nan)
    potential[eligible] = -np.log(grid[eligible])

    worst = math.inf
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        centre = potential[1:-1, 1:-1]
        forward = np.roll(np.roll(potential, -dx, axis=0), -dy, axis=1)[1:-1, 1:-1]
        backward = np.roll(np.roll(potential, dx, axis=0), dy, axis=1)[1:-1, 1:-1]
        second = forward + backward - 2.0 * centre
        valid = np.isfinite(second)
        if valid.any():
            worst = min(worst, float(second[valid].min()))

    violation = 0.0 if not math.isfinite(worst) else max(0.0, -worst)
    bound = 1e-6 + 5.0 * mask.h**2
    logger.info("log_concavity_check: %s p=%g violation=%.3e bound=%.3e", kind, result.p, violation, bound)
    return CheckReport(
        claim_id="korevaar_log_concavity",
        inputs={"kind": kind, "p": result.p, "h": mask.h, "margin_cells": margin_cells},
        lhs=violation,
        rhs=bound,
        relation=Relation.LE,
        notes="worst negative midpoint second difference of -log u",
        extras={"min_second_difference": None if not math.isfinite(worst) else worst},
    )
