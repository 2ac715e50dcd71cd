"""Verification harness: every inequality and identity becomes a reproducible CheckReport."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import ndimage
from scipy.special import jn_zeros

from app.schemas.config import HarnessSettings, LinearSolver, SolverOptions
from app.schemas.domain import Disk, DomainSpec, Rectangle
from app.schemas.report import AggregateReport, CheckReport, EnvironmentBlock, Relation, Verdict, normalized_margin
from app.services.errors import (
    AnalysisError,
    InvalidInputError,
    NonConvexDomainRefusedError,
    NotNestedError,
)
from app.services.exitwalk import compare_torsion
from app.services.export import library_versions, write_frame, write_json
from app.services.field import GridField, dirichlet_energy, field_from_function, lp_norm_p, phi_p, poisson_solve
from app.services.geometry import (
    GridMask,
    ball_volume,
    continuous_inradius,
    continuous_volume,
    equal_volume_ball,
    inradius,
    rasterize,
    scale_domain,
    truncated_slab,
)
from app.services.radial import (
    EnergyVariant,
    RadialProfile,
    a_p,
    a_p_closed_form,
    energy_ball_critical,
    energy_drift,
    energy_slab,
    integrate_critical_ode,
    integrate_slab_ode,
    radial_c_p,
    shoot_ball,
    solve_slab,
)
from app.services.solver import SolveResult, log_concavity_check, ring_deviation, solve_domain
from app.services.symmetrize import rearrange

logger = logging.getLogger(__name__)

__all__ = [
    "SUITES",
    "check_a_p",
    "check_ball_shooting",
    "check_continuity_in_p",
    "check_domain_monotonicity",
    "check_energy_conservation",
    "check_faber_krahn",
    "check_gradient_bound",
    "check_grid_radial_agreement",
    "check_holder_comparison",
    "check_inradius_ball_maximizes",
    "check_laplacian_symmetry",
    "check_lemma_identity",
    "check_log_concavity",
    "check_pfunction_bound",
    "check_pfunction_slab",
    "check_product_identity",
    "check_radial_symmetry",
    "check_rearrangement_energy",
    "check_rearrangement_norms",
    "check_scale_invariance",
    "check_scaling_law",
    "check_slab_eigen_limit",
    "check_slab_superlinear_growth",
    "check_slab_torsion_decay",
    "check_uniqueness_consistency",
    "probe_c_infinity",
    "run_suite",
    "write_aggregate",
]

UNIT_DISK = Disk(radius=1.0)
UNIT_SQUARE = Rectangle(half_widths=(0.5, 0.5))

FINE_H = 1.0 / 128.0
TENT_H = 1.0 / 256.0
SLAB_H = 1.0 / 16.0
SLAB_LENGTHS = (4.0, 8.0, 16.0)
PRODUCT_VALUE = 4.0

_CONVEX_KINDS = frozenset({"disk", "rectangle"})

Check = Callable[[], CheckReport]


def _settings(settings: Optional[HarnessSettings]) -> HarnessSettings:
    return settings or HarnessSettings()


def _solve(domain: DomainSpec, p: float, h: float, options: SolverOptions) -> SolveResult:
    return solve_domain(domain, p, h, options)


def _describe(domain: DomainSpec) -> dict:
    return domain.model_dump(mode="json")


def _direct(options: SolverOptions) -> SolverOptions:
    return options.model_copy(update={"linear_solver": LinearSolver.DIRECT})


# ---------------------------------------------------------------------------
# scaling, monotonicity and comparison
# ---------------------------------------------------------------------------


def check_scaling_law(
    domain: DomainSpec, p: float, r: float, settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """C_p(rD) = r^{n-2-2n/p} C_p(D), solved at matched resolution (h on D, r·h on rD)."""

    settings = _settings(settings)
    if r == 1.0:
        raise InvalidInputError("the scaling law needs r != 1")
    base = _solve(domain, p, settings.h, settings.solver)
    scaled_domain = scale_domain(domain, r)
    scaled = _solve(scaled_domain, p, settings.h * r, settings.solver)

    n = 2
    expected = n - 2.0 - 2.0 * n / p
    measured = math.log(scaled.c_p / base.c_p) / math.log(r)
    normalized_base = base.volume ** (2.0 / p) * base.c_p
    normalized_scaled = scaled.volume ** (2.0 / p) * scaled.c_p
    same_mask = bool(
        base.mask.shape == scaled.mask.shape and np.array_equal(base.mask.occupancy, scaled.mask.occupancy)
    )
    return CheckReport(
        claim_id="scaling_law",
        inputs={"domain": _describe(domain), "p": p, "r": r, "h": settings.h},
        lhs=measured,
        rhs=expected,
        relation=Relation.EQ,
        tolerance=settings.slack,
        notes="measured exponent log(C_p(rD)/C_p(D))/log r against n - 2 - 2n/p",
        extras={
            "c_p": base.c_p,
            "c_p_scaled": scaled.c_p,
            "volume_normalized_ratio": normalized_scaled / (r ** (n - 2) * normalized_base),
            "identical_masks": same_mask,
        },
    )


def _nested(inner: GridMask, outer: GridMask) -> bool:
    local = inner.node_indices - np.asarray(outer.offset)
    rows, cols = outer.shape
    inside = (local[:, 0] >= 0) & (local[:, 0] < rows) & (local[:, 1] >= 0) & (local[:, 1] < cols)
    if not inside.all():
        return False
    return bool(outer.occupancy[local[:, 0], local[:, 1]].all())


def check_domain_monotonicity(
    inner: DomainSpec, outer: DomainSpec, p: float, settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """C_p(inner) >= C_p(outer) whenever the inner mask sits inside the outer one."""

    settings = _settings(settings)
    inner_mask = rasterize(inner, settings.h)
    outer_mask = rasterize(outer, settings.h)
    if not _nested(inner_mask, outer_mask):
        raise NotNestedError(f"{inner.kind} mask is not contained in the {outer.kind} mask at h={settings.h:g}")
    small = _solve(inner, p, settings.h, settings.solver)
    large = _solve(outer, p, settings.h, settings.solver)
    return CheckReport(
        claim_id="domain_monotonicity",
        inputs={"inner": _describe(inner), "outer": _describe(outer), "p": p, "h": settings.h},
        lhs=small.c_p,
        rhs=large.c_p,
        relation=Relation.GE,
        tolerance=10.0 * settings.solver.tol,
        notes="C_p decreases as the domain grows",
        extras={"inner_cells": inner_mask.cell_count, "outer_cells": outer_mask.cell_count},
    )


def check_holder_comparison(
    domain: DomainSpec, p: float, q: float, settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """V^{2/p} C_p(D) > V^{2/q} C_q(D) for 1 <= p < q."""

    settings = _settings(settings)
    if not 1.0 <= p < q:
        raise InvalidInputError(f"need 1 <= p < q, got p={p}, q={q}")
    low = _solve(domain, p, settings.h, settings.solver)
    high = _solve(domain, q, settings.h, settings.solver)
    v = low.volume
    extras: dict = {"volume": v, "c_p": low.c_p, "c_q": high.c_p}
    if p == 1.0 and q == 2.0:
        # λ(D) < 4A(D)/P(D)
        four_a_over_p = 4.0 * v / low.r_p
        extras.update(
            {"lambda": high.c_p, "four_area_over_rigidity": four_a_over_p, "polya_szego_form": high.c_p < four_a_over_p}
        )
    return CheckReport(
        claim_id="holder_comparison",
        inputs={"domain": _describe(domain), "p": p, "q": q, "h": settings.h},
        lhs=v ** (2.0 / p) * low.c_p,
        rhs=v ** (2.0 / q) * high.c_p,
        relation=Relation.GT,
        tolerance=5.0 * settings.solver.tol,
        notes="strict Hoelder comparison; margins inside the band are inconclusive",
        extras=extras,
    )


def check_faber_krahn(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """C_p(D) >= C_p(B) for the disk B with the area of the rasterized D.

    B is rasterized and solved on its own, so a disk input compares two
    different masks and lands near equality at grid tolerance.
    """

    settings = _settings(settings)
    own = _solve(domain, p, settings.h, settings.solver)
    ball = equal_volume_ball(own.mask)
    reference = _solve(ball, p, settings.h, settings.solver)
    tolerance = settings.slack
    margin = normalized_margin(own.c_p, reference.c_p)
    return CheckReport(
        claim_id="faber_krahn",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=own.c_p,
        rhs=reference.c_p,
        relation=Relation.GE,
        tolerance=tolerance,
        notes="the equal-area disk minimizes C_p",
        extras={
            "disk_radius": ball.radius,
            "continuous_area": continuous_volume(domain),
            "equality_case": abs(margin) <= tolerance,
            "relative_gap": margin,
        },
    )


def check_inradius_ball_maximizes(
    domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """C_p(D) <= C_p(B_R) with R the inradius (the inball lies inside D)."""

    settings = _settings(settings)
    own = _solve(domain, p, settings.h, settings.solver)
    radius = continuous_inradius(domain)
    if radius is None:
        radius = inradius(own.mask)
    inball = Disk(radius=radius)
    reference = _solve(inball, p, settings.h, settings.solver)
    return CheckReport(
        claim_id="inradius_ball_maximizes",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=own.c_p,
        rhs=reference.c_p,
        relation=Relation.LE,
        tolerance=settings.slack,
        notes="domain monotonicity against the inscribed disk",
        extras={"inradius": radius},
    )


# ---------------------------------------------------------------------------
# P-function bounds
# ---------------------------------------------------------------------------


def _require_convex(domain: DomainSpec) -> None:
    if domain.kind not in _CONVEX_KINDS:
        raise NonConvexDomainRefusedError(f"the P-function bound is only checked on disks and rectangles, got {domain.kind}")


def check_pfunction_bound(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """u_M^{2-p} <= 2ΛR^2 / (p A_p^2) on the calibrated solution."""

    settings = _settings(settings)
    _require_convex(domain)
    result = _solve(domain, p, settings.h, settings.solver)
    radius = continuous_inradius(domain)
    lam = result.calibrated_lambda
    u_max = result.u_max
    bound = 2.0 * lam * radius**2 / (p * a_p(p) ** 2)

    extras: dict = {"u_max": u_max, "lambda": lam, "inradius": radius, "a_p": a_p(p)}
    if p == 1.0:
        extras["u_max_le_r_squared"] = u_max <= radius**2 * (1.0 + settings.slack)
    if p == 2.0:
        hersch = math.pi**2 / (4.0 * radius**2)
        extras.update({"hersch_bound": hersch, "lambda_ge_hersch": lam >= hersch * (1.0 - settings.slack)})
    return CheckReport(
        claim_id="pfunction_bound",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=u_max ** (2.0 - p),
        rhs=bound,
        relation=Relation.LE,
        tolerance=settings.slack,
        notes="inradius bound from the P-function",
        extras=extras,
    )


def check_pfunction_slab(p: float, lam: float = 1.0) -> CheckReport:
    """Equality of the inradius bound on the slab (R = 1)."""

    profile = solve_slab(p, lam)
    return CheckReport(
        claim_id="pfunction_slab",
        inputs={"p": p, "lambda": lam},
        lhs=profile.u_max ** (2.0 - p),
        rhs=2.0 * profile.lam / (p * a_p(p) ** 2),
        relation=Relation.EQ,
        tolerance=1e-6,
        notes="the slab realizes the P-function bound",
        extras={"u_max": profile.u_max, "lambda_solved": profile.lam},
    )


def check_gradient_bound(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """|∇u|^2 + (2Λ/p)u^p <= (2Λ/p)u_M^p at nodes at least three cells inside."""

    settings = _settings(settings)
    _require_convex(domain)
    result = _solve(domain, p, settings.h, settings.solver)
    mask = result.mask
    grid = result.calibrated_u.to_grid()
    gx, gy = np.gradient(grid, mask.h)
    depth = ndimage.distance_transform_edt(mask.occupancy)
    eligible = depth >= 3
    coefficient = 2.0 * result.calibrated_lambda / p
    pfunction = gx * gx + gy * gy + coefficient * np.power(np.clip(grid, 0.0, None), p)
    return CheckReport(
        claim_id="gradient_bound",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=float(pfunction[eligible].max()),
        rhs=coefficient * result.u_max**p,
        relation=Relation.LE,
        tolerance=settings.slack,
        notes="P-function peaks where u does",
        extras={"max_gradient": float(np.sqrt(gx * gx + gy * gy)[eligible].max())},
    )


# ---------------------------------------------------------------------------
# identities and solver properties
# ---------------------------------------------------------------------------


def check_lemma_identity(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """Φ_p(u) = Λ (∫u^p)^{(p-2)/p} at convergence."""

    settings = _settings(settings)
    result = _solve(domain, p, settings.h, settings.solver)
    norm_p = lp_norm_p(result.u, p)
    return CheckReport(
        claim_id="lemma_identity",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=phi_p(result.u, p),
        rhs=result.lagrange_lambda * norm_p ** ((p - 2.0) / p),
        relation=Relation.EQ,
        tolerance=1e-6,
        notes="Lagrange multiplier read from the last linear solve",
        extras={"iterations": result.iterations, "residual": result.pde_residual},
    )


def check_product_identity(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """c_p * r_p against the value forced by the definitions of C_p and R_p."""

    settings = _settings(settings)
    result = _solve(domain, p, settings.h, settings.solver)
    return CheckReport(
        claim_id="product_identity",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=result.product,
        rhs=PRODUCT_VALUE,
        relation=Relation.EQ,
        tolerance=1e-10,
        notes="R_1 = P and C_1 = 4/P force the product 4; the printed identity states 1",
        extras={"c_p": result.c_p, "r_p": result.r_p},
    )


def check_uniqueness_consistency(
    domain: DomainSpec,
    p: float,
    seeds: Sequence[int] = (1, 2),
    settings: Optional[HarnessSettings] = None,
) -> CheckReport:
    """Random positive starts converge to the same C_p."""

    settings = _settings(settings)
    if len(seeds) < 2:
        raise InvalidInputError("need at least two seeds")
    values = [
        _solve(domain, p, settings.h, settings.solver.model_copy(update={"seed": seed})).c_p for seed in seeds
    ]
    return CheckReport(
        claim_id="uniqueness_consistency",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h, "seeds": list(seeds)},
        lhs=max(values),
        rhs=min(values),
        relation=Relation.EQ,
        tolerance=10.0 * settings.solver.tol,
        notes="seed independence of the converged C_p",
        extras={"values": values},
    )


def check_log_concavity(domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    settings = _settings(settings)
    if domain.kind not in _CONVEX_KINDS:
        raise NonConvexDomainRefusedError(f"log-concavity is only checked on disks and rectangles, got {domain.kind}")
    result = _solve(domain, p, settings.h, settings.solver)
    margin_cells = max(2, round(0.125 * inradius(result.mask) / settings.h))
    return log_concavity_check(result, margin_cells)


def check_radial_symmetry(p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """Spread of the unit-disk solution over nodes on one ring."""

    settings = _settings(settings)
    result = _solve(UNIT_DISK, p, settings.h, settings.solver)
    return CheckReport(
        claim_id="radial_symmetry",
        inputs={"p": p, "h": settings.h},
        lhs=ring_deviation(result),
        rhs=0.03,
        relation=Relation.LE,
        notes="positive solutions on a disk are radial",
        extras={"min_value": float(result.u.values.min())},
    )


def _torsion_field(domain: DomainSpec, h: float, options: SolverOptions) -> GridField:
    mask = rasterize(domain, h)
    return poisson_solve(GridField(mask, np.ones(mask.cell_count)), options.cg_tol, method=options.linear_solver.value)


def check_scale_invariance(
    domain: DomainSpec,
    p: float,
    factors: Sequence[float] = (0.5, 3.0, 1e3),
    settings: Optional[HarnessSettings] = None,
) -> CheckReport:
    """Φ_p(k u) = Φ_p(u) on a positive field."""

    settings = _settings(settings)
    u = _torsion_field(domain, settings.h, settings.solver)
    base = phi_p(u, p)
    deviation = max(abs(phi_p(u * k, p) - base) / base for k in factors)
    return CheckReport(
        claim_id="scale_invariance",
        inputs={"domain": _describe(domain), "p": p, "factors": list(factors)},
        lhs=deviation,
        rhs=1e-12,
        relation=Relation.LE,
        notes="largest relative change of Phi_p under amplitude scaling",
    )


def check_laplacian_symmetry(domain: DomainSpec, settings: Optional[HarnessSettings] = None) -> CheckReport:
    settings = _settings(settings)
    stiffness = rasterize(domain, settings.h).stiffness
    asymmetry = abs(stiffness - stiffness.T).max()
    return CheckReport(
        claim_id="laplacian_symmetry",
        inputs={"domain": _describe(domain), "h": settings.h},
        lhs=float(asymmetry) / float(abs(stiffness).max()),
        rhs=1e-15,
        relation=Relation.LE,
        notes="max |K - K^T| / max |K|",
    )


def check_rearrangement_norms(domain: DomainSpec, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """L^q sums of u and its rearrangement coincide for q in {1, 1.5, 2, 3}."""

    settings = _settings(settings)
    u = _torsion_field(domain, settings.h, settings.solver)
    rearranged = rearrange(u).field
    worst = 0.0
    for q in (1.0, 1.5, 2.0, 3.0):
        before, after = lp_norm_p(u, q), lp_norm_p(rearranged, q)
        worst = max(worst, abs(after - before) / before)
    return CheckReport(
        claim_id="rearrangement_norms",
        inputs={"domain": _describe(domain), "h": settings.h},
        lhs=worst,
        rhs=1e-12,
        relation=Relation.LE,
        notes="rearrangement permutes the value multiset",
        extras={"cells": u.mask.cell_count},
    )


def check_rearrangement_energy(
    domain: DomainSpec, p: float, settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """Φ_p(u*) <= Φ_p(u)(1 + 5%) for the solved minimizer."""

    settings = _settings(settings)
    result = _solve(domain, p, settings.h, settings.solver)
    rearranged = rearrange(result.u).field
    return CheckReport(
        claim_id="rearrangement_energy",
        inputs={"domain": _describe(domain), "p": p, "h": settings.h},
        lhs=phi_p(rearranged, p),
        rhs=phi_p(result.u, p),
        relation=Relation.LE,
        tolerance=0.05,
        notes="discrete Polya-Szegoe at grid tolerance",
        extras={"energy_before": dirichlet_energy(result.u), "energy_after": dirichlet_energy(rearranged)},
    )


# ---------------------------------------------------------------------------
# radial and ODE checks
# ---------------------------------------------------------------------------


def _ball_oracle(n: int, p: float) -> float:
    if p == 1.0:
        return n * (n + 2) / ball_volume(n)
    if p == 2.0 and n == 3:
        return math.pi**2
    if p == 2.0 and n % 2 == 0:
        return float(jn_zeros(n // 2 - 1, 1)[0]) ** 2
    raise InvalidInputError(f"no closed-form C_p for n={n}, p={p}")


def check_ball_shooting(n: int, p: float) -> CheckReport:
    """Shooting against closed forms: n(n+2)/ω_n for p = 1, squared Bessel zeros for p = 2."""

    oracle = _ball_oracle(n, p)
    profile = shoot_ball(n, p)
    return CheckReport(
        claim_id="ball_shooting",
        inputs={"n": n, "p": p},
        lhs=radial_c_p(profile),
        rhs=oracle,
        relation=Relation.EQ,
        tolerance=1e-5,
        notes="radial shooting against analytic oracles",
        extras={"lambda": profile.lam, "boundary_residual": profile.boundary_residual},
    )


def check_grid_radial_agreement(p: float, settings: Optional[HarnessSettings] = None) -> CheckReport:
    """Unit-disk grid solve against the n = 2 shooting value."""

    settings = _settings(settings)
    h = min(settings.h, FINE_H)
    grid = _solve(UNIT_DISK, p, h, _direct(settings.solver))
    radial = radial_c_p(shoot_ball(2, p))
    return CheckReport(
        claim_id="grid_radial_agreement",
        inputs={"p": p, "h": h},
        lhs=grid.c_p,
        rhs=radial,
        relation=Relation.EQ,
        tolerance=settings.slack,
        notes="staircase bias of the disk mask is O(h)",
    )


def check_a_p(p: float) -> CheckReport:
    return CheckReport(
        claim_id="a_p_dual_route",
        inputs={"p": p},
        lhs=a_p(p),
        rhs=a_p_closed_form(p),
        relation=Relation.EQ,
        tolerance=1e-9,
        notes="quadrature against the Gamma-function formula",
    )


def check_energy_conservation(
    system: str,
    p: Optional[float] = None,
    n: Optional[int] = None,
    lam: float = 1.0,
) -> CheckReport:
    """RK4 drift of the slab energy or of the critical-exponent energy.

    The critical check asserts the conserved coefficient and reports the drift of
    the printed one.
    """

    if system == "slab":
        if p is None:
            raise InvalidInputError("the slab energy needs p")
        half_length = a_p(p) / math.sqrt(2.0 * lam / p)
        trajectory = integrate_slab_ode(1.0, 0.0, p, lam, 0.9 * half_length)
        drift = energy_drift(trajectory, lambda u, du: energy_slab(u, du, p, lam))
        return CheckReport(
            claim_id="energy_conservation_slab",
            inputs={"p": p, "lambda": lam},
            lhs=drift,
            rhs=1e-8,
            relation=Relation.LE,
            notes="(u')^2 + (2Lambda/p) u^p from the maximum towards the zero",
            extras={"x_end": 0.9 * half_length},
        )
    if system == "ball_critical":
        if n is None:
            raise InvalidInputError("the critical energy needs n")
        trajectory = integrate_critical_ode(0.5, 0.0, n, lam, 20.0)
        conserved = energy_drift(
            trajectory, lambda v, dv: energy_ball_critical(v, dv, n, lam, EnergyVariant.CONSERVED)
        )
        printed = energy_drift(trajectory, lambda v, dv: energy_ball_critical(v, dv, n, lam, EnergyVariant.PRINTED))
        return CheckReport(
            claim_id="energy_conservation_critical",
            inputs={"n": n, "lambda": lam},
            lhs=conserved,
            rhs=1e-8,
            relation=Relation.LE,
            notes="conserved coefficient (n-2)^2/8; the printed (n-2)^2/2 drifts",
            extras={"printed_variant_drift": printed},
        )
    raise InvalidInputError(f"unknown energy system '{system}'")


# ---------------------------------------------------------------------------
# slab limits, C_infinity and continuity in p
# ---------------------------------------------------------------------------


def _slab_values(p: float, settings: HarnessSettings, lengths: Sequence[float]) -> list[float]:
    h = max(settings.h, SLAB_H)
    options = _direct(settings.solver)
    return [_solve(truncated_slab(1.0, length), p, h, options).c_p for length in lengths]


def check_slab_eigen_limit(
    settings: Optional[HarnessSettings] = None, lengths: Sequence[float] = SLAB_LENGTHS
) -> CheckReport:
    """C_2(D_R) decreases towards π²/4 as R grows."""

    settings = _settings(settings)
    values = _slab_values(2.0, settings, lengths)
    shot = solve_slab(2.0, math.pi**2 / 4.0).lam
    return CheckReport(
        claim_id="slab_eigen_limit",
        inputs={"lengths": list(lengths), "h": max(settings.h, SLAB_H)},
        lhs=values[-1],
        rhs=math.pi**2 / 4.0,
        relation=Relation.EQ,
        tolerance=settings.slack,
        notes="first Dirichlet eigenvalue of the width-2 slab",
        extras={
            "values": values,
            "monotone": all(a > b for a, b in zip(values, values[1:])),
            "shooting_lambda": shot,
        },
    )


def check_slab_torsion_decay(
    settings: Optional[HarnessSettings] = None, lengths: Sequence[float] = SLAB_LENGTHS
) -> CheckReport:
    """C_1(D_R) tends to zero: the ratio between the longest and shortest truncation stays below 0.3."""

    settings = _settings(settings)
    values = _slab_values(1.0, settings, lengths)
    return CheckReport(
        claim_id="slab_torsion_decay",
        inputs={"lengths": list(lengths), "h": max(settings.h, SLAB_H)},
        lhs=values[-1] / values[0],
        rhs=0.3,
        relation=Relation.LT,
        notes="C_1 of the slab is zero",
        extras={"values": values, "monotone": all(a > b for a, b in zip(values, values[1:]))},
    )


def _section_trial(profile: RadialProfile, length: float, h: float) -> float:
    """Grid Φ_p of the slab profile in y, ramped to zero over the last unit in x."""

    mask = rasterize(truncated_slab(1.0, length), h)

    def fn(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.clip(length - np.abs(x), 0.0, 1.0) * np.interp(y, profile.x, profile.u)

    return phi_p(field_from_function(mask, fn), profile.p)


def check_slab_superlinear_growth(
    p: float = 3.0,
    settings: Optional[HarnessSettings] = None,
    lengths: Sequence[float] = SLAB_LENGTHS,
) -> CheckReport:
    """Φ_p of cross-section trial functions on D_R grows with R for p > 2.

    Each trial is the slab profile in y, ramped off near x = ±R, and its Φ_p is
    evaluated on the grid. The grid minimizers are reported alongside; they are
    bounded by domain monotonicity, so only the trials carry the growth.
    """

    settings = _settings(settings)
    if p <= 2.0:
        raise InvalidInputError(f"superlinear growth needs p > 2, got {p}")
    h = max(settings.h, SLAB_H)
    profile = solve_slab(p, 1.0)
    section = radial_c_p(profile)
    trials = [_section_trial(profile, length, h) for length in lengths]
    extras: dict = {
        "trial_values": trials,
        "trial_increasing": all(a < b for a, b in zip(trials, trials[1:])),
        "profile_values": [section * (2.0 * length) ** (1.0 - 2.0 / p) for length in lengths],
    }
    try:
        extras["grid_values"] = _slab_values(p, settings, lengths)
    except AnalysisError as exc:
        logger.warning("slab grid solves for p=%g failed: %s", p, exc)
        extras["grid_error"] = exc.to_payload()
    return CheckReport(
        claim_id="slab_superlinear_growth",
        inputs={"p": p, "lengths": list(lengths), "h": h},
        lhs=trials[-1],
        rhs=trials[0],
        relation=Relation.GT,
        tolerance=settings.slack,
        notes="cross-section trials diverge with R, so C_p(S) is infinite along them",
        extras=extras,
    )


def _tent(delta: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def fn(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = np.hypot(x, y)
        return np.where(r < delta, 1.0, np.clip((1.0 - r) / (1.0 - delta), 0.0, None))

    return fn


def probe_c_infinity(
    p_list: Sequence[float] = (2.0, 4.0, 8.0, 16.0),
    delta_list: Sequence[float] = (0.5, 0.2, 0.1),
    settings: Optional[HarnessSettings] = None,
) -> CheckReport:
    """Tent energies π(1+δ)/(1-δ) and the trend of V^{2/p}C_p for growing p.

    The report counts failed sub-claims: a tent energy off by more than the slack,
    or V^{2/p}C_p on the unit disk failing to decrease along p_list. The
    disk/square comparison is recorded only; the limit value of C_∞ is left open.
    """

    settings = _settings(settings)
    if list(p_list) != sorted(p_list):
        raise InvalidInputError("p_list must be increasing")

    mask = rasterize(UNIT_DISK, TENT_H)
    energies = [dirichlet_energy(field_from_function(mask, _tent(delta))) for delta in delta_list]
    exact = [math.pi * (1.0 + delta) / (1.0 - delta) for delta in delta_list]
    worst = max(abs(e - x) / x for e, x in zip(energies, exact))

    disk_trend = []
    for p in p_list:
        disk = _solve(UNIT_DISK, p, settings.h, settings.solver)
        disk_trend.append(disk.volume ** (2.0 / p) * disk.c_p)
    square = _solve(UNIT_SQUARE, p_list[-1], settings.h, settings.solver)
    square_normalized = square.volume ** (2.0 / p_list[-1]) * square.c_p
    decreasing = all(a > b for a, b in zip(disk_trend, disk_trend[1:]))

    failed = []
    if worst > settings.slack:
        failed.append("tent_energy")
    if not decreasing:
        failed.append("normalized_disk_trend")
        logger.warning("V^(2/p) C_p on the unit disk does not decrease along p=%s: %s", list(p_list), disk_trend)

    return CheckReport(
        claim_id="c_infinity_probe",
        inputs={"p_list": list(p_list), "delta_list": list(delta_list), "h": settings.h, "tent_h": TENT_H},
        lhs=float(len(failed)),
        rhs=0.0,
        relation=Relation.EQ,
        notes="C_inf <= pi; whether the bound improves stays open",
        extras={
            "failed": failed,
            "tent_worst_error": worst,
            "tent_energies": energies,
            "tent_exact": exact,
            "tent_decreasing": all(a > b for a, b in zip(energies, energies[1:])),
            "normalized_disk": disk_trend,
            "normalized_disk_decreasing": decreasing,
            "normalized_square_at_max_p": square_normalized,
            "disk_to_square_ratio": disk_trend[-1] / square_normalized,
        },
    )


def check_continuity_in_p(
    domain: DomainSpec, p_grid: Sequence[float], settings: Optional[HarnessSettings] = None
) -> CheckReport:
    """No jump of C_p along p_grid exceeds 5x what the neighbouring secants predict."""

    settings = _settings(settings)
    grid = [float(p) for p in p_grid]
    if grid != sorted(grid):
        raise InvalidInputError("p_grid must be sorted")
    if any(b - a > 0.1 + 1e-12 for a, b in zip(grid, grid[1:])):
        raise InvalidInputError("p_grid spacing must not exceed 0.1")

    inputs = {"domain": _describe(domain), "p_grid": grid, "h": settings.h}
    if len(grid) < 3:
        return CheckReport(
            claim_id="continuity_in_p",
            inputs=inputs,
            lhs=0.0,
            rhs=5.0,
            relation=Relation.LE,
            notes="fewer than three points: nothing to compare",
        )

    values = np.array([_solve(domain, p, settings.h, settings.solver).c_p for p in grid])
    spacing = np.diff(grid)
    jumps = np.abs(np.diff(values))
    slopes = jumps / spacing
    ratios = []
    for k in range(jumps.size):
        neighbours = [slopes[j] for j in (k - 1, k + 1) if 0 <= j < slopes.size]
        expected = float(np.mean(neighbours)) * spacing[k]
        ratios.append(jumps[k] / expected if expected > 0.0 else (0.0 if jumps[k] == 0.0 else math.inf))
    return CheckReport(
        claim_id="continuity_in_p",
        inputs=inputs,
        lhs=float(max(ratios)),
        rhs=5.0,
        relation=Relation.LE,
        notes="largest jump relative to the neighbouring secant slopes",
        extras={"c_p": values.tolist(), "jump_ratios": ratios},
    )


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _label(domain: DomainSpec) -> str:
    return "square" if domain == UNIT_SQUARE else domain.kind


def _identities(settings: HarnessSettings) -> list[tuple[str, Check]]:
    entries: list[tuple[str, Check]] = []
    for domain in (UNIT_DISK, UNIT_SQUARE):
        for p in (1.0, 1.5, 2.0, 3.0):
            tag = f"{_label(domain)},p={p:g}"
            entries.append((f"lemma_identity[{tag}]", partial(check_lemma_identity, domain, p, settings)))
            entries.append((f"product_identity[{tag}]", partial(check_product_identity, domain, p, settings)))
    for p in (1.0, 1.5, 2.0, 3.0, 10.0):
        entries.append((f"a_p_dual_route[p={p:g}]", partial(check_a_p, p)))
    return entries


def _scaling(settings: HarnessSettings) -> list[tuple[str, Check]]:
    return [
        (f"scaling_law[{_label(d)},p={p:g},r={r:g}]", partial(check_scaling_law, d, p, r, settings))
        for d in (UNIT_DISK, UNIT_SQUARE)
        for p in (1.0, 2.0, 3.0)
        for r in (0.5, 2.0)
    ]


def _comparison(settings: HarnessSettings) -> list[tuple[str, Check]]:
    entries: list[tuple[str, Check]] = [
        ("domain_monotonicity[disk(1)<disk(2),p=2]",
         partial(check_domain_monotonicity, UNIT_DISK, Disk(radius=2.0), 2.0, settings)),
        ("domain_monotonicity[square<disk,p=1]",
         partial(check_domain_monotonicity, UNIT_SQUARE, Disk(radius=math.sqrt(0.5) + 0.05), 1.0, settings)),
    ]
    for domain in (UNIT_DISK, UNIT_SQUARE):
        for p, q in ((1.0, 2.0), (2.0, 3.0), (1.5, 2.5)):
            entries.append(
                (f"holder_comparison[{_label(domain)},p={p:g},q={q:g}]",
                 partial(check_holder_comparison, domain, p, q, settings))
            )
    for p in (1.0, 1.5, 2.0, 3.0):
        entries.append((f"faber_krahn[square,p={p:g}]", partial(check_faber_krahn, UNIT_SQUARE, p, settings)))
    entries.append(("faber_krahn[disk,p=2]", partial(check_faber_krahn, UNIT_DISK, 2.0, settings)))
    for domain in (Rectangle(half_widths=(2.0, 1.0)), Rectangle(half_widths=(4.0, 0.5)), UNIT_DISK):
        key = "disk" if domain.kind == "disk" else "rectangle{:g}x{:g}".format(*domain.half_widths)
        entries.append(
            (f"inradius_ball_maximizes[{key},p=2]", partial(check_inradius_ball_maximizes, domain, 2.0, settings))
        )
    return entries


def _pfunction(settings: HarnessSettings) -> list[tuple[str, Check]]:
    entries: list[tuple[str, Check]] = []
    for key, domain in (("disk", UNIT_DISK), ("square", UNIT_SQUARE), ("rectangle2x1", Rectangle(half_widths=(2.0, 1.0)))):
        for p in (1.0, 2.0, 3.0):
            entries.append((f"pfunction_bound[{key},p={p:g}]", partial(check_pfunction_bound, domain, p, settings)))
        entries.append((f"gradient_bound[{key},p=1]", partial(check_gradient_bound, domain, 1.0, settings)))
    for p in (1.0, 1.5, 2.0, 3.0):
        entries.append((f"pfunction_slab[p={p:g}]", partial(check_pfunction_slab, p)))
    return entries


def _radial(settings: HarnessSettings) -> list[tuple[str, Check]]:
    entries: list[tuple[str, Check]] = [
        (f"ball_shooting[n={n},p={p:g}]", partial(check_ball_shooting, n, p))
        for n, p in ((2, 1.0), (3, 1.0), (2, 2.0), (3, 2.0), (4, 2.0))
    ]
    entries += [
        (f"grid_radial_agreement[p={p:g}]", partial(check_grid_radial_agreement, p, settings))
        for p in (1.0, 1.5, 2.0, 3.0)
    ]
    entries += [
        (f"energy_conservation_slab[p={p:g}]", partial(check_energy_conservation, "slab", p=p))
        for p in (1.0, 1.5, 2.0, 3.0)
    ]
    entries += [
        (f"energy_conservation_critical[n={n}]", partial(check_energy_conservation, "ball_critical", n=n))
        for n in (3, 4)
    ]
    return entries


def _slab(settings: HarnessSettings) -> list[tuple[str, Check]]:
    return [
        ("slab_eigen_limit", partial(check_slab_eigen_limit, settings)),
        ("slab_torsion_decay", partial(check_slab_torsion_decay, settings)),
        ("slab_superlinear_growth[p=3]", partial(check_slab_superlinear_growth, 3.0, settings)),
    ]


def _probe(settings: HarnessSettings) -> list[tuple[str, Check]]:
    p_grid = [round(1.0 + 0.1 * k, 10) for k in range(11)]
    return [
        ("c_infinity_probe", partial(probe_c_infinity, settings=settings)),
        ("continuity_in_p[disk]", partial(check_continuity_in_p, UNIT_DISK, p_grid, settings)),
        ("continuity_in_p[square]", partial(check_continuity_in_p, UNIT_SQUARE, p_grid, settings)),
    ]


def _properties(settings: HarnessSettings) -> list[tuple[str, Check]]:
    entries: list[tuple[str, Check]] = []
    for domain in (UNIT_DISK, UNIT_SQUARE):
        tag = _label(domain)
        entries += [
            (f"scale_invariance[{tag},p=1.5]", partial(check_scale_invariance, domain, 1.5, settings=settings)),
            (f"laplacian_symmetry[{tag}]", partial(check_laplacian_symmetry, domain, settings)),
            (f"rearrangement_norms[{tag}]", partial(check_rearrangement_norms, domain, settings)),
        ]
    entries.append(("rearrangement_energy[square,p=2]", partial(check_rearrangement_energy, UNIT_SQUARE, 2.0, settings)))
    for p in (1.5, 2.0):
        entries.append(
            (f"uniqueness_consistency[disk,p={p:g}]",
             partial(check_uniqueness_consistency, UNIT_DISK, p, (settings.seed, settings.seed + 1), settings))
        )
    for p in (1.0, 1.5, 2.0, 3.0):
        entries.append((f"radial_symmetry[p={p:g}]", partial(check_radial_symmetry, p, settings)))
    for p in (1.0, 2.0):
        entries.append((f"korevaar_log_concavity[disk,p={p:g}]", partial(check_log_concavity, UNIT_DISK, p, settings)))
    return entries


def _exitwalk(settings: HarnessSettings) -> list[tuple[str, Check]]:
    disk_points = [(r, 0.0) for r in (0.0, 0.2, 0.4, 0.6, 0.8)]
    return [
        ("exit_time_torsion[disk]",
         partial(compare_torsion, UNIT_DISK, disk_points, settings.paths, settings.seed, settings.h,
                 settings.solver, settings.workers)),
        ("exit_time_torsion[square]",
         partial(compare_torsion, UNIT_SQUARE, [(0.0, 0.0)], settings.paths, settings.seed, settings.h,
                 settings.solver, settings.workers)),
    ]


SUITES: dict[str, Callable[[HarnessSettings], list[tuple[str, Check]]]] = {
    "identities": _identities,
    "scaling": _scaling,
    "comparison": _comparison,
    "pfunction": _pfunction,
    "radial": _radial,
    "slab": _slab,
    "probe": _probe,
    "properties": _properties,
    "exitwalk": _exitwalk,
}


def _entries(name: str, settings: HarnessSettings) -> list[tuple[str, Check]]:
    if name == "all":
        return [entry for build in SUITES.values() for entry in build(settings)]
    try:
        return SUITES[name](settings)
    except KeyError:
        raise InvalidInputError(f"unknown suite '{name}'; choose from {', '.join(['all', *SUITES])}") from None


def _run_entry(claim_id: str, check: Check) -> CheckReport:
    try:
        report = check()
    except AnalysisError as exc:
        logger.error("check %s raised %s: %s", claim_id, exc.code, exc)
        return CheckReport(
            claim_id=claim_id,
            lhs=math.nan,
            rhs=math.nan,
            relation=Relation.EQ,
            notes=f"{exc.code}: {exc}",
            extras={"error": exc.to_payload()},
        )
    return report.model_copy(update={"claim_id": claim_id})


def run_suite(name: str, settings: Optional[HarnessSettings] = None) -> AggregateReport:
    """Run every check of a suite; reports are sorted by claim_id whatever the fan-out."""

    settings = _settings(settings)
    entries = _entries(name, settings)
    logger.info("run_suite %s: %d checks, h=%g, %d workers", name, len(entries), settings.h, settings.workers)
    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            reports = list(pool.map(lambda entry: _run_entry(*entry), entries))
    else:
        reports = [_run_entry(*entry) for entry in entries]
    reports.sort(key=lambda report: report.claim_id)
    for report in reports:
        if report.verdict is not Verdict.PASS:
            logger.warning("%s", report.summary_line())
    return AggregateReport(
        suite=name,
        environment=EnvironmentBlock(settings=settings, versions=library_versions()),
        checks=reports,
    )


def write_aggregate(report: AggregateReport, out_dir: Path) -> tuple[Path, Path]:
    """``verify_<suite>.json`` plus a ``claim_id,pass,margin`` CSV summary."""

    out_dir = Path(out_dir)
    json_path = write_json(out_dir / f"verify_{report.suite}.json", report)
    frame = pd.DataFrame(
        {
            "claim_id": [check.claim_id for check in report.checks],
            "pass": [check.passed for check in report.checks],
            "margin": [check.margin for check in report.checks],
        }
    )
    csv_path = write_frame(out_dir / f"verify_{report.suite}.csv", frame)
    return json_path, csv_path
