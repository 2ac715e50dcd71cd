"""Numerical services: grids, solvers, radial shooting, rearrangement, checks and Monte Carlo."""
