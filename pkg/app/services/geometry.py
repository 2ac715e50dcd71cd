"""Rasterization of domain descriptions and geometric functionals on grid masks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import ndimage, sparse
from scipy.special import gamma

from app.schemas.domain import GRID_KINDS, Disk, DomainSpec, Rectangle
from app.services.errors import (
    InvalidDomainError,
    InvalidMaskError,
    NonpositiveScaleError,
    ResolutionTooCoarseError,
    UnsupportedDimensionError,
)

logger = logging.getLogger(__name__)

__all__ = [
    "GridMask",
    "MIN_CELLS_ACROSS",
    "ball_volume",
    "contains",
    "continuous_inradius",
    "continuous_volume",
    "equal_volume_ball",
    "inradius",
    "rasterize",
    "scale_domain",
    "segment_distance",
    "truncated_slab",
    "volume",
]

MIN_CELLS_ACROSS = 8
_FOUR_NEIGHBOURS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class GridMask:
    """Occupancy of a uniform node lattice with spacing ``h``.

    Node ``(i, j)`` of ``occupancy`` sits at ``((offset[0] + i) h, (offset[1] + j) h)``,
    so every mask built with the same spacing lives on one global lattice.
    The outermost ring of the array is always exterior.
    """

    h: float
    offset: tuple[int, int]
    occupancy: np.ndarray
    source: Optional[DomainSpec] = None

    def __post_init__(self) -> None:
        occupancy = np.asarray(self.occupancy, dtype=bool)
        object.__setattr__(self, "occupancy", occupancy)
        if occupancy.ndim != 2 or not occupancy.any():
            raise InvalidMaskError("mask has no interior cells")
        if occupancy[0, :].any() or occupancy[-1, :].any() or occupancy[:, 0].any() or occupancy[:, -1].any():
            raise InvalidMaskError("mask must keep an exterior ring")
        _, components = ndimage.label(occupancy, structure=_FOUR_NEIGHBOURS)
        if components != 1:
            raise InvalidMaskError(f"mask has {components} connected components")

    @classmethod
    def from_nodes(
        cls,
        h: float,
        nodes: np.ndarray,
        source: Optional[DomainSpec] = None,
    ) -> "GridMask":
        """Build a padded mask from global integer node indices of shape (k, 2)."""

        nodes = np.asarray(nodes, dtype=np.int64).reshape(-1, 2)
        if nodes.size == 0:
            raise InvalidMaskError("mask has no interior cells")
        low = nodes.min(axis=0) - 1
        high = nodes.max(axis=0) + 1
        occupancy = np.zeros(tuple(high - low + 1), dtype=bool)
        occupancy[nodes[:, 0] - low[0], nodes[:, 1] - low[1]] = True
        return cls(h=h, offset=(int(low[0]), int(low[1])), occupancy=occupancy, source=source)

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    @property
    def origin(self) -> tuple[float, float]:
        return (self.offset[0] * self.h, self.offset[1] * self.h)

    @cached_property
    def flat_index(self) -> np.ndarray:
        """Row-major positions of interior nodes; field values follow this order."""

        return np.flatnonzero(self.occupancy)

    @property
    def cell_count(self) -> int:
        return int(self.flat_index.size)

    @cached_property
    def node_indices(self) -> np.ndarray:
        """Global integer indices of the interior nodes, shape (k, 2)."""

        local = np.column_stack(np.unravel_index(self.flat_index, self.shape))
        return local + np.asarray(self.offset)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        nodes = self.node_indices
        return nodes[:, 0] * self.h, nodes[:, 1] * self.h

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of every column and row of the padded array."""

        nx, ny = self.shape
        return (
            (self.offset[0] + np.arange(nx)) * self.h,
            (self.offset[1] + np.arange(ny)) * self.h,
        )

    @cached_property
    def stiffness(self) -> sparse.csr_matrix:
        """-Δ_h restricted to the interior nodes (zero exterior values)."""

        nx, ny = self.shape
        box = sparse.kronsum(_second_difference(ny), _second_difference(nx), format="csr")
        index = self.flat_index
        return (box[index][:, index] / (self.h * self.h)).tocsr()

    @cached_property
    def factorized(self):
        """Sparse LU solve of the stiffness system, built on first use."""

        from scipy.sparse.linalg import factorized

        logger.debug("factorizing stiffness matrix with %d unknowns", self.cell_count)
        return factorized(self.stiffness.tocsc())

    @cached_property
    def diameter_cells(self) -> int:
        return int(max(self.shape))


def _second_difference(size: int) -> sparse.csr_matrix:
    return sparse.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(size, size), format="csr")


def contains(domain: DomainSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Strict membership of planar points in a grid-solvable domain."""

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kind = domain.kind
    if kind == "ball" and domain.n == 2:
        return x * x + y * y < domain.radius**2
    if kind == "disk":
        return x * x + y * y < domain.radius**2
    if kind == "rectangle":
        a, b = domain.half_widths
        return (np.abs(x) < a) & (np.abs(y) < b)
    if kind == "annulus":
        rho2 = x * x + y * y
        return (rho2 > domain.r_in**2) & (rho2 < domain.r_out**2)
    if kind == "polygon":
        return _inside_polygon(np.asarray(domain.vertices, dtype=float), x, y)
    raise InvalidDomainError(f"domain kind '{kind}' has no planar membership test")


def _inside_polygon(vertices: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Ray casting to +x with the half-open rule (y0 <= y < y1) so shared vertices count once.
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    on_edge = np.zeros_like(inside)
    scale = float(np.abs(vertices).max()) or 1.0
    for (x0, y0), (x1, y1) in zip(vertices, np.roll(vertices, -1, axis=0)):
        crosses = (y0 <= y) != (y1 <= y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < x_cross)
        on_edge |= segment_distance(x, y, x0, y0, x1, y1) <= 1e-12 * scale
    return inside & ~on_edge


def segment_distance(x, y, x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    dx, dy = x1 - x0, y1 - y0
    length2 = dx * dx + dy * dy
    t = np.clip(((x - x0) * dx + (y - y0) * dy) / length2, 0.0, 1.0)
    return np.hypot(x - (x0 + t * dx), y - (y0 + t * dy))


def _bounding_box(domain: DomainSpec) -> tuple[float, float, float, float]:
    if domain.kind in ("disk", "ball"):
        r = domain.radius
        return -r, r, -r, r
    if domain.kind == "annulus":
        r = domain.r_out
        return -r, r, -r, r
    if domain.kind == "rectangle":
        a, b = domain.half_widths
        return -a, a, -b, b
    vertices = np.asarray(domain.vertices, dtype=float)
    return (
        float(vertices[:, 0].min()),
        float(vertices[:, 0].max()),
        float(vertices[:, 1].min()),
        float(vertices[:, 1].max()),
    )


def rasterize(domain: DomainSpec, h: float) -> GridMask:
    """Mark lattice nodes strictly inside ``domain`` as interior cells."""

    if domain.n != 2:
        raise UnsupportedDimensionError(f"grid solves are planar; got n={domain.n}")
    if domain.kind not in GRID_KINDS and domain.kind != "ball":
        raise InvalidDomainError(f"domain kind '{domain.kind}' is unbounded; use truncated_slab")
    if not h > 0:
        raise ResolutionTooCoarseError(f"grid spacing must be positive, got {h}")

    xmin, xmax, ymin, ymax = _bounding_box(domain)
    i = np.arange(math.floor(xmin / h), math.ceil(xmax / h) + 1)
    j = np.arange(math.floor(ymin / h), math.ceil(ymax / h) + 1)
    ii, jj = np.meshgrid(i, j, indexing="ij")
    inside = contains(domain, ii * h, jj * h)
    if not inside.any():
        raise ResolutionTooCoarseError(f"no lattice node with spacing {h} lies inside the domain")

    mask = GridMask.from_nodes(h, np.column_stack([ii[inside], jj[inside]]), source=domain)
    cells_across = 2.0 * inradius(mask) / h
    if cells_across < MIN_CELLS_ACROSS:
        raise ResolutionTooCoarseError(
            f"only {cells_across:.1f} cells across the inradius at h={h}; need {MIN_CELLS_ACROSS}"
        )
    logger.debug("rasterized %s at h=%g into %d cells", domain.kind, h, mask.cell_count)
    return mask


def volume(mask: GridMask) -> float:
    """Cell count times h^2."""

    if mask.cell_count == 0:
        raise InvalidMaskError("mask has no interior cells")
    return mask.cell_count * mask.h**2


def inradius(mask: GridMask) -> float:
    """Largest Euclidean distance from an interior node to the nearest exterior node."""

    distance = ndimage.distance_transform_edt(mask.occupancy)
    return float(distance.max()) * mask.h


def scale_domain(domain: DomainSpec, r: float) -> DomainSpec:
    """Multiply every length parameter by ``r``."""

    if not r > 0:
        raise NonpositiveScaleError(f"scale factor must be positive, got {r}")
    kind = domain.kind
    if kind in ("disk", "ball"):
        update = {"radius": domain.radius * r}
    elif kind == "rectangle":
        update = {"half_widths": tuple(w * r for w in domain.half_widths)}
    elif kind == "polygon":
        update = {"vertices": [(x * r, y * r) for x, y in domain.vertices]}
    elif kind == "annulus":
        update = {"r_in": domain.r_in * r, "r_out": domain.r_out * r}
    else:
        update = {"half_width": domain.half_width * r}
    return domain.model_copy(update=update)


def equal_volume_ball(mask: GridMask) -> Disk:
    """Disk whose area equals the mask volume."""

    return Disk(radius=math.sqrt(volume(mask) / math.pi))


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""

    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def continuous_volume(domain: DomainSpec) -> float:
    kind = domain.kind
    if kind == "disk":
        return math.pi * domain.radius**2
    if kind == "ball":
        return ball_volume(domain.n) * domain.radius**domain.n
    if kind == "rectangle":
        a, b = domain.half_widths
        return 4.0 * a * b
    if kind == "annulus":
        return math.pi * (domain.r_out**2 - domain.r_in**2)
    if kind == "polygon":
        vertices = np.asarray(domain.vertices, dtype=float)
        x, y = vertices[:, 0], vertices[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    raise InvalidDomainError("a slab has infinite volume")


def continuous_inradius(domain: DomainSpec) -> Optional[float]:
    """Exact inradius where the kind determines it; None for polygons."""

    kind = domain.kind
    if kind in ("disk", "ball"):
        return float(domain.radius)
    if kind == "rectangle":
        return float(min(domain.half_widths))
    if kind == "annulus":
        return 0.5 * (domain.r_out - domain.r_in)
    if kind == "slab":
        return float(domain.half_width)
    return None


def truncated_slab(half_width: float, length: float) -> Rectangle:
    """Truncation (-length, length) x (-half_width, half_width) of the planar slab |y| < half_width."""

    return Rectangle(half_widths=(length, half_width))
