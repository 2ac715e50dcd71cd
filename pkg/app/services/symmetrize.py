"""Discrete Schwarz rearrangement of grid fields."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from app.schemas.domain import Disk
from app.services.errors import NegativeFieldError
from app.services.export import write_frame
from app.services.field import GridField, dirichlet_energy
from app.services.geometry import GridMask

logger = logging.getLogger(__name__)

__all__ = [
    "RearrangedField",
    "distribution_volume",
    "level_set_energy",
    "rearrange",
    "write_rearrangement_csv",
]


@dataclass(frozen=True)
class RearrangedField:
    """Radially nonincreasing field on a centred disk-shaped mask with the source's cell count."""

    source_cells: int
    source_h: float
    field: GridField
    radial_values: np.ndarray

    @property
    def cell_count(self) -> int:
        return self.field.mask.cell_count

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"radius": self.radial_values[:, 0], "value": self.radial_values[:, 1]})


def distribution_volume(u: GridField, t: float) -> float:
    """Area of the super-level set {u > t}."""

    return int(np.count_nonzero(u.values > t)) * u.mask.h**2


def _spiral_nodes(count: int) -> np.ndarray:
    # lattice nodes ordered by distance from the origin, ties broken by angle
    reach = int(math.ceil(math.sqrt(count / math.pi))) + 2
    axis = np.arange(-reach, reach + 1)
    ii, jj = np.meshgrid(axis, axis, indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    order = np.lexsort((np.arctan2(jj, ii), ii * ii + jj * jj))
    return np.column_stack([ii[order], jj[order]])[:count]


def rearrange(u: GridField) -> RearrangedField:
    """Assign the k-th largest value to the k-th node of a centre-out ordering."""

    if np.any(u.values < 0):
        raise NegativeFieldError("rearrangement needs a non-negative field")
    count = u.mask.cell_count
    h = u.mask.h
    nodes = _spiral_nodes(count)
    descending = np.sort(u.values)[::-1]

    disk = Disk(radius=math.sqrt(count * h * h / math.pi))
    mask = GridMask.from_nodes(h, nodes, source=disk)
    grid = np.zeros(mask.shape)
    local = nodes - np.asarray(mask.offset)
    grid[local[:, 0], local[:, 1]] = descending
    rearranged = GridField(mask, grid.flat[mask.flat_index])

    radii = np.hypot(nodes[:, 0], nodes[:, 1]) * h
    logger.debug("rearranged %d cells onto a disk of radius %.6g", count, disk.radius)
    return RearrangedField(
        source_cells=count,
        source_h=h,
        field=rearranged,
        radial_values=np.column_stack([radii, descending]),
    )


def level_set_energy(u: GridField, t: float) -> float:
    """ψ(t): Dirichlet energy of (u - t)_+, i.e. ∫ |∇u|^2 over {u > t}."""

    return dirichlet_energy(u.with_values(np.maximum(u.values - t, 0.0)))


def write_rearrangement_csv(rearranged: RearrangedField, path: Path) -> Path:
    return write_frame(
        path,
        rearranged.to_frame(),
        [f"h={rearranged.source_h!r}", f"cells={rearranged.source_cells}"],
    )
