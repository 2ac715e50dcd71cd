"""Shared solves for the test suite; expensive grids are built once per session."""

import pytest

from app.schemas.config import HarnessSettings, LinearSolver, SolverOptions
from app.schemas.domain import Disk, Rectangle
from app.services.solver import solve_domain

FINE_H = 1.0 / 128.0
COARSE_H = 1.0 / 32.0


@pytest.fixture(scope="session")
def direct_options() -> SolverOptions:
    return SolverOptions(linear_solver=LinearSolver.DIRECT)


@pytest.fixture(scope="session")
def unit_disk() -> Disk:
    return Disk(radius=1.0)


@pytest.fixture(scope="session")
def unit_square() -> Rectangle:
    return Rectangle(half_widths=(0.5, 0.5))


@pytest.fixture(scope="session")
def disk_torsion(unit_disk, direct_options):
    return solve_domain(unit_disk, 1.0, FINE_H, direct_options)


@pytest.fixture(scope="session")
def disk_eigen(unit_disk, direct_options):
    return solve_domain(unit_disk, 2.0, FINE_H, direct_options)


@pytest.fixture(scope="session")
def square_eigen(unit_square, direct_options):
    return solve_domain(unit_square, 2.0, 1.0 / 64.0, direct_options)


@pytest.fixture(scope="session")
def coarse_settings(direct_options) -> HarnessSettings:
    return HarnessSettings(h=COARSE_H, solver=direct_options, paths=20_000, seed=7)
