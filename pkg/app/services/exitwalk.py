"""Walk-on-spheres estimates of the mean Brownian exit time (the p = 1 torsion function)."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.schemas.config import SolverOptions
from app.schemas.domain import DomainSpec
from app.schemas.report import CheckReport, ExitEstimateReport, Relation
from app.services.errors import (
    InvalidInputError,
    InvalidPathCountError,
    PointOutsideDomainError,
    UnsupportedKindError,
)
from app.services.export import write_frame
from app.services.field import interpolate
from app.services.geometry import contains, continuous_inradius, rasterize, segment_distance
from app.services.solver import solve_torsion

logger = logging.getLogger(__name__)

__all__ = [
    "GENERATOR",
    "ExitEstimate",
    "compare_torsion",
    "distance_to_boundary",
    "wos_exit_time",
    "write_estimates_csv",
]

GENERATOR = "PCG64"
_MAX_JUMPS = 100_000


@dataclass(frozen=True)
class ExitEstimate:
    point: tuple[float, ...]
    mean: float
    std_error: float
    paths: int
    seed: int
    eps: float
    workers: int = 1
    generator: str = GENERATOR

    def to_report(self) -> ExitEstimateReport:
        return ExitEstimateReport(
            point=list(self.point),
            mean=self.mean,
            std_error=self.std_error,
            paths=self.paths,
            seed=self.seed,
            eps=self.eps,
            workers=self.workers,
            generator=self.generator,
        )


def _dimension(domain: DomainSpec) -> int:
    return int(domain.n)


def distance_to_boundary(domain: DomainSpec, points: np.ndarray) -> np.ndarray:
    """Distance from interior points to the boundary, shape (m,) for points of shape (m, n)."""

    points = np.asarray(points, dtype=float)
    kind = domain.kind
    if kind in ("disk", "ball"):
        return domain.radius - np.linalg.norm(points, axis=1)
    if kind == "rectangle":
        a, b = domain.half_widths
        return np.minimum(a - np.abs(points[:, 0]), b - np.abs(points[:, 1]))
    if kind == "annulus":
        rho = np.linalg.norm(points, axis=1)
        return np.minimum(domain.r_out - rho, rho - domain.r_in)
    if kind == "slab":
        return domain.half_width - np.abs(points[:, -1])
    if kind == "polygon":
        vertices = np.asarray(domain.vertices, dtype=float)
        x, y = points[:, 0], points[:, 1]
        best = np.full(points.shape[0], np.inf)
        for (x0, y0), (x1, y1) in zip(vertices, np.roll(vertices, -1, axis=0)):
            best = np.minimum(best, segment_distance(x, y, x0, y0, x1, y1))
        return best
    raise UnsupportedKindError(f"no distance oracle for domain kind '{kind}'")


def _inside(domain: DomainSpec, point: np.ndarray) -> bool:
    if domain.kind in ("ball", "slab"):
        return bool(distance_to_boundary(domain, point[None, :])[0] > 0.0)
    return bool(contains(domain, point[0:1], point[1:2])[0])


def _default_eps(domain: DomainSpec) -> float:
    radius = continuous_inradius(domain)
    if radius is None:
        vertices = np.asarray(domain.vertices, dtype=float)
        xs = np.linspace(vertices[:, 0].min(), vertices[:, 0].max(), 201)
        ys = np.linspace(vertices[:, 1].min(), vertices[:, 1].max(), 201)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        inside = contains(domain, gx, gy)
        samples = np.column_stack([gx[inside], gy[inside]])
        radius = float(distance_to_boundary(domain, samples).max())
    return 1e-4 * radius


def _walk(domain: DomainSpec, start: np.ndarray, count: int, eps: float, rng: np.random.Generator) -> np.ndarray:
    dimension = start.size
    positions = np.tile(start, (count, 1))
    times = np.zeros(count)
    active = np.arange(count)
    for _ in range(_MAX_JUMPS):
        if active.size == 0:
            break
        radius = distance_to_boundary(domain, positions[active])
        moving = radius >= eps
        active, radius = active[moving], radius[moving]
        if active.size == 0:
            break
        direction = rng.standard_normal((active.size, dimension))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        positions[active] += radius[:, None] * direction
        # mean exit time of standard Brownian motion from a ball of radius R in R^n
        times[active] += radius * radius / dimension
    else:
        logger.warning("walk-on-spheres stopped %d paths at the jump cap", active.size)
    return times


def wos_exit_time(
    domain: DomainSpec,
    x0: Sequence[float],
    paths: int,
    eps: Optional[float] = None,
    seed: int = 0,
    workers: int = 1,
) -> ExitEstimate:
    """Mean exit time from ``x0``; E[τ] solves Δw + 2 = 0 (generator ½Δ)."""

    if paths < 1:
        raise InvalidPathCountError(f"need at least one path, got {paths}")
    if workers < 1:
        raise InvalidInputError(f"need at least one worker, got {workers}")
    start = np.asarray(x0, dtype=float).reshape(-1)
    if start.size != _dimension(domain):
        raise InvalidInputError(f"point has {start.size} coordinates, domain has n={domain.n}")
    if not _inside(domain, start):
        raise PointOutsideDomainError(f"starting point {start.tolist()} is not strictly inside the {domain.kind}")
    eps = _default_eps(domain) if eps is None else eps
    if not eps > 0:
        raise InvalidInputError(f"shell width must be positive, got {eps}")

    streams = [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(workers)]
    counts = [paths // workers + (1 if k < paths % workers else 0) for k in range(workers)]
    if workers == 1:
        chunks = [_walk(domain, start, counts[0], eps, streams[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda k: _walk(domain, start, counts[k], eps, streams[k]), range(workers)))
    times = np.concatenate(chunks)

    mean = float(times.mean())
    std_error = float(times.std(ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0
    logger.info(
        "wos_exit_time %s at %s: mean=%.6g +- %.2g (%d paths, %d workers)",
        domain.kind, start.tolist(), mean, std_error, paths, workers,
    )
    return ExitEstimate(
        point=tuple(float(c) for c in start),
        mean=mean,
        std_error=std_error,
        paths=paths,
        seed=seed,
        eps=float(eps),
        workers=workers,
    )


def compare_torsion(
    domain: DomainSpec,
    points: Sequence[Sequence[float]],
    paths: int,
    seed: int = 0,
    h: float = 1.0 / 64.0,
    options: Optional[SolverOptions] = None,
    workers: int = 1,
    allowance: float = 0.02,
) -> CheckReport:
    """Walk-on-spheres against the grid torsion function at each point.

    Passes when every |MC - PDE| <= 3 std_error + allowance * PDE.
    """

    if paths < 1:
        raise InvalidPathCountError(f"need at least one path, got {paths}")
    torsion = solve_torsion(rasterize(domain, h), options).calibrated_u
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    pde = interpolate(torsion, points)

    estimates = [
        wos_exit_time(domain, point, paths, seed=seed + index, workers=workers)
        for index, point in enumerate(points)
    ]
    rows = []
    worst = 0.0
    for estimate, reference in zip(estimates, pde):
        bound = 3.0 * estimate.std_error + allowance * float(reference)
        ratio = abs(estimate.mean - float(reference)) / bound
        worst = max(worst, ratio)
        rows.append(
            {
                "point": list(estimate.point),
                "monte_carlo": estimate.mean,
                "std_error": estimate.std_error,
                "grid": float(reference),
                "ratio": ratio,
            }
        )
    return CheckReport(
        claim_id="exit_time_torsion",
        inputs={"domain": domain.model_dump(mode="json"), "paths": paths, "seed": seed, "h": h},
        lhs=worst,
        rhs=1.0,
        relation=Relation.LE,
        notes="max |MC - PDE| / (3 std_error + 2% PDE); generator 1/2 Laplacian, PCG64 streams",
        extras={"points": rows, "generator": GENERATOR, "workers": workers},
    )


def write_estimates_csv(estimates: Sequence[ExitEstimate], path: Path) -> Path:
    frame = pd.DataFrame(
        {
            "point": [" ".join(f"{c:.17g}" for c in e.point) for e in estimates],
            "mean": [e.mean for e in estimates],
            "std_error": [e.std_error for e in estimates],
            "paths": [e.paths for e in estimates],
            "seed": [e.seed for e in estimates],
        }
    )
    return write_frame(path, frame, [f"generator={GENERATOR}"])
