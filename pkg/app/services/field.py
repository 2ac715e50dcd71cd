"""Discrete calculus on grid fields: Laplacian, Poisson solves, energies and L^p integrals."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import LinearOperator, cg

from app.services.errors import (
    InvalidInputError,
    NegativeValueWithFractionalPowerError,
    NoConvergenceError,
    ZeroDenominatorError,
)
from app.services.export import write_frame
from app.services.geometry import GridMask

logger = logging.getLogger(__name__)

__all__ = [
    "GridField",
    "dirichlet_energy",
    "field_from_function",
    "inner",
    "interpolate",
    "laplacian_apply",
    "lp_norm_p",
    "phi_p",
    "poisson_solve",
    "solve_linear",
    "write_field_csv",
]

_CG_ITERATIONS_PER_CELL = 20


@dataclass(frozen=True, eq=False)
class GridField:
    """Values on the interior nodes of ``mask``; zero everywhere else."""

    mask: GridMask
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.size != self.mask.cell_count:
            raise InvalidInputError(
                f"field has {values.size} values for {self.mask.cell_count} interior cells"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("field values must be finite")
        object.__setattr__(self, "values", values)

    def to_grid(self) -> np.ndarray:
        """Padded 2-D array, zero outside the mask."""

        grid = np.zeros(self.mask.shape)
        grid.flat[self.mask.flat_index] = self.values
        return grid

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.mask, values)

    def __mul__(self, factor: float) -> "GridField":
        return GridField(self.mask, self.values * factor)

    __rmul__ = __mul__

    @property
    def max(self) -> float:
        return float(self.values.max())


def field_from_function(mask: GridMask, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> GridField:
    x, y = mask.coordinates()
    return GridField(mask, np.broadcast_to(fn(x, y), x.shape).astype(float))


def inner(u: GridField, v: GridField) -> float:
    """Discrete L^2 inner product with cell weight h^2."""

    return float(np.dot(u.values, v.values)) * u.mask.h**2


def laplacian_apply(u: GridField) -> GridField:
    """Five-point Laplacian with zero ghost values outside the mask."""

    return GridField(u.mask, -(u.mask.stiffness @ u.values))


def solve_linear(
    mask: GridMask,
    rhs: np.ndarray,
    tol: float,
    *,
    method: str = "cg",
    x0: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, int]:
    """Solve -Δ_h u = rhs; returns the values and the inner iteration count."""

    if not tol > 0:
        raise InvalidInputError(f"tolerance must be positive, got {tol}")
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros_like(rhs), 0
    if method == "direct":
        return np.asarray(mask.factorized(rhs)), 1

    operator = mask.stiffness
    inverse_diagonal = 1.0 / operator.diagonal()
    jacobi = LinearOperator(operator.shape, matvec=lambda x: inverse_diagonal * x, dtype=float)
    maxiter = _CG_ITERATIONS_PER_CELL * mask.diameter_cells
    iterations = 0

    def _count(_xk: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    solution, info = cg(operator, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=jacobi, callback=_count)
    if info != 0:
        raise NoConvergenceError(
            f"conjugate gradients stopped after {iterations} iterations (cap {maxiter}) at tol={tol:g}"
        )
    return solution, iterations


def poisson_solve(
    f: GridField,
    tol: float,
    *,
    method: str = "cg",
    x0: Optional[GridField] = None,
) -> GridField:
    """Return u with -Δ_h u = f to relative residual ``tol``."""

    values, iterations = solve_linear(
        f.mask, f.values, tol, method=method, x0=None if x0 is None else x0.values
    )
    logger.debug("poisson_solve: %d cells, %d iterations (%s)", f.mask.cell_count, iterations, method)
    return GridField(f.mask, values)


def dirichlet_energy(u: GridField) -> float:
    """Sum of squared differences over all grid edges, exterior edges included.

    In two dimensions (Δu/h)^2 h^2 = (Δu)^2, so the energy carries no factor of h.
    """

    grid = u.to_grid()
    return float(np.sum(np.diff(grid, axis=0) ** 2) + np.sum(np.diff(grid, axis=1) ** 2))


def lp_norm_p(u: GridField, p: float) -> float:
    """∫ u^p dV (the p-th power integral, not its root)."""

    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    values = u.values
    if float(p).is_integer():
        powered = values ** int(p)
    else:
        if np.any(values < 0):
            raise NegativeValueWithFractionalPowerError(
                f"field has negative values and p={p} is not an integer"
            )
        powered = values**p
    return float(powered.sum()) * u.mask.h**2


def phi_p(u: GridField, p: float) -> float:
    """Dirichlet energy over (∫u^p)^{2/p}."""

    denominator = lp_norm_p(u, p)
    if denominator <= 0.0:
        raise ZeroDenominatorError("Phi_p is undefined for a field with vanishing L^p integral")
    return dirichlet_energy(u) / denominator ** (2.0 / p)


def interpolate(u: GridField, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of the zero-extended field at planar points."""

    xs, ys = u.mask.axes()
    interpolator = RegularGridInterpolator((xs, ys), u.to_grid(), bounds_error=False, fill_value=0.0)
    return interpolator(np.asarray(points, dtype=float).reshape(-1, 2))


def write_field_csv(u: GridField, path: Path) -> Path:
    local = u.mask.node_indices - np.asarray(u.mask.offset)
    frame = pd.DataFrame({"i": local[:, 0], "j": local[:, 1], "value": u.values})
    header = [
        f"h={u.mask.h!r}",
        "origin={!r},{!r}".format(*u.mask.origin),
        "dims={},{}".format(*u.mask.shape),
    ]
    return write_frame(path, frame, header)
