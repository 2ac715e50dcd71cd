"""Slab and ball reductions solved by RK4 shooting, plus the associated energies and A_p."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.integrate import quad, simpson
from scipy.optimize import brentq
from scipy.special import gamma

from app.schemas.report import RadialReport
from app.services.errors import (
    InvalidInputError,
    NoBracketError,
    NoZeroFoundError,
    SupercriticalRefusedError,
)
from app.services.geometry import ball_volume
from app.services.solver import Regime, admissibility

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_STEP",
    "EnergyVariant",
    "RadialProfile",
    "Trajectory",
    "a_p",
    "a_p_closed_form",
    "calibrate",
    "energy_ball_critical",
    "energy_drift",
    "energy_slab",
    "integrate_critical_ode",
    "integrate_slab_ode",
    "radial_c_p",
    "shoot_ball",
    "solve_slab",
]

DEFAULT_STEP = 1e-4
R_MAX = 50.0
_MAX_BRACKET_EXPANSIONS = 60

Deriv = Callable[[float, float, float], float]


class EnergyVariant(str, Enum):
    PRINTED = "printed"
    CONSERVED = "conserved"


@dataclass(frozen=True)
class RadialProfile:
    """Samples (x, u, u') of a slab cross-section (n = 1, x in [-1, 1]) or a ball profile (x = r in [0, 1])."""

    n: int
    p: float
    lam: float
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    first_zero: float
    boundary_residual: float
    richardson_error: float

    @property
    def system(self) -> str:
        return "slab" if self.n == 1 else "ball"

    @property
    def u_max(self) -> float:
        return float(self.u.max())

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.x, self.u, self.du])

    def to_frame(self) -> pd.DataFrame:
        column = "x" if self.n == 1 else "r"
        return pd.DataFrame({column: self.x, "u": self.u, "du": self.du})

    def to_report(self) -> RadialReport:
        return RadialReport(
            system=self.system,
            n=self.n,
            p=self.p,
            lambda_=self.lam,
            c_p=radial_c_p(self),
            u_max=self.u_max,
            first_zero=self.first_zero,
            boundary_residual=self.boundary_residual,
            richardson_error=self.richardson_error,
            samples=int(self.x.size),
        )


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray


def a_p(p: float) -> float:
    """∫_0^1 dt / sqrt(1 - t^p) after t = 1 - s^2, which removes the endpoint singularity."""

    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")

    def integrand(s: float) -> float:
        return 2.0 * s / math.sqrt(-math.expm1(p * math.log1p(-s * s)))

    value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


def a_p_closed_form(p: float) -> float:
    return math.sqrt(math.pi) * gamma(1.0 + 1.0 / p) / gamma(0.5 + 1.0 / p)


def _power(u: float, exponent: float) -> float:
    # odd extension of u^exponent; 0**0 == 1 keeps p = 1 at full strength on the boundary
    return u**exponent if u >= 0.0 else -((-u) ** exponent)


def _rk4_step(deriv: Deriv, t: float, u: float, v: float, step: float) -> tuple[float, float]:
    half = 0.5 * step
    k1u, k1v = v, deriv(t, u, v)
    k2u, k2v = v + half * k1v, deriv(t + half, u + half * k1u, v + half * k1v)
    k3u, k3v = v + half * k2v, deriv(t + half, u + half * k2u, v + half * k2v)
    k4u, k4v = v + step * k3v, deriv(t + step, u + step * k3u, v + step * k3v)
    return (
        u + step / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )


def _integrate(deriv: Deriv, t0: float, u0: float, v0: float, step: float, count: int) -> Trajectory:
    t = t0 + step * np.arange(count + 1)
    u = np.empty(count + 1)
    v = np.empty(count + 1)
    u[0], v[0] = u0, v0
    cu, cv = u0, v0
    for k in range(count):
        cu, cv = _rk4_step(deriv, float(t[k]), cu, cv, step)
        u[k + 1], v[k + 1] = cu, cv
    return Trajectory(t, u, v)


def _hermite_zero(t: float, u0: float, v0: float, u1: float, v1: float, step: float) -> float:
    if u1 == 0.0:
        return t + step

    def cubic(theta: float) -> float:
        h00 = 2 * theta**3 - 3 * theta**2 + 1
        h10 = theta**3 - 2 * theta**2 + theta
        h01 = -2 * theta**3 + 3 * theta**2
        h11 = theta**3 - theta**2
        return h00 * u0 + h10 * step * v0 + h01 * u1 + h11 * step * v1

    return t + step * brentq(cubic, 0.0, 1.0, xtol=1e-15)


def _first_zero(deriv: Deriv, t0: float, u0: float, v0: float, step: float, t_limit: float) -> Optional[float]:
    """Location where u first drops to zero after t0, or None inside [t0, t_limit]."""

    t, u, v = t0, u0, v0
    k = 0
    while t < t_limit:
        u1, v1 = _rk4_step(deriv, t, u, v, step)
        if u1 <= 0.0 and u > 0.0:
            return _hermite_zero(t, u, v, u1, v1, step)
        k += 1
        t, u, v = t0 + k * step, u1, v1
    return None


def _bracket(fn: Callable[[float], float], guess: float, *, what: str) -> tuple[float, float]:
    lo, hi = guess / 1.5, guess * 1.5
    f_lo, f_hi = fn(lo), fn(hi)
    for _ in range(_MAX_BRACKET_EXPANSIONS):
        if f_lo * f_hi <= 0.0:
            return lo, hi
        if abs(f_lo) < abs(f_hi):
            hi, f_hi = lo, f_lo
            lo = lo / 1.5
            f_lo = fn(lo)
        else:
            lo, f_lo = hi, f_hi
            hi = hi * 1.5
            f_hi = fn(hi)
    raise NoBracketError(f"could not bracket the {what} around {guess:g}")


def _slab_deriv(p: float, lam: float) -> Deriv:
    exponent = p - 1.0
    return lambda _x, u, _v: -lam * _power(u, exponent)


def _ball_deriv(n: int, p: float, lam: float) -> Deriv:
    exponent = p - 1.0

    def deriv(r: float, u: float, v: float) -> float:
        source = lam * _power(u, exponent)
        if r == 0.0:
            return -source / n
        return -(n - 1) / r * v - source

    return deriv


def solve_slab(p: float, lam: float, tol: float = 1e-12, step: float = DEFAULT_STEP) -> RadialProfile:
    """Positive solution of u'' + Λu^{p-1} = 0 on (-1, 1) with zero ends, by shooting from x = -1.

    For p != 2 the slope u'(-1) is the shooting parameter. For p = 2 the multiplier
    is shot instead (``lam`` is only the starting guess) and the amplitude fixed by u_M = 1.
    """

    if p < 1:
        raise InvalidInputError(f"p must be at least 1, got {p}")
    if not lam > 0:
        raise InvalidInputError(f"lambda must be positive, got {lam}")
    window = 3.0

    if p == 2.0:

        def miss(trial: float) -> float:
            zero = _first_zero(_slab_deriv(2.0, trial), -1.0, 0.0, math.sqrt(trial), step, window)
            return (window if zero is None else zero) - 1.0

        lam = brentq(miss, *_bracket(miss, lam, what="slab eigenvalue"), xtol=tol, rtol=4 * np.finfo(float).eps)
        slope = math.sqrt(lam)
    else:
        guess_max = (2.0 * lam / (p * a_p(p) ** 2)) ** (1.0 / (2.0 - p))
        guess = math.sqrt(2.0 * lam / p) * guess_max ** (p / 2.0)

        def miss(slope_trial: float) -> float:
            zero = _first_zero(_slab_deriv(p, lam), -1.0, 0.0, slope_trial, step, window)
            return (window if zero is None else zero) - 1.0

        slope = brentq(miss, *_bracket(miss, guess, what="slab slope"), xtol=tol, rtol=4 * np.finfo(float).eps)

    deriv = _slab_deriv(p, lam)
    count = int(round(2.0 / step))
    path = _integrate(deriv, -1.0, 0.0, slope, step, count)
    fine = _integrate(deriv, -1.0, 0.0, slope, step / 2.0, 2 * count)
    first_zero = _first_zero(deriv, -1.0, 0.0, slope, step, window)
    residual = float(path.y[-1])
    u = path.y.copy()
    u[-1] = 0.0
    logger.info("solve_slab: p=%g lambda=%.12g slope=%.12g residual=%.2e", p, lam, slope, residual)
    return RadialProfile(
        n=1,
        p=float(p),
        lam=float(lam),
        x=path.t,
        u=u,
        du=path.dy,
        first_zero=float(first_zero if first_zero is not None else math.nan),
        boundary_residual=abs(residual),
        richardson_error=float(np.max(np.abs(path.y - fine.y[::2]))),
    )


def shoot_ball(n: int, p: float, tol: float = 1e-12, step: float = DEFAULT_STEP) -> RadialProfile:
    """Radial solution on the unit ball in R^n, shooting from the origin with u(0) = 1.

    With Λ = 1 the first zero r0 is located; rescaling r -> r/r0 puts it at r = 1
    with multiplier r0^2. For p = 2 the multiplier itself is shot.
    """

    verdict = admissibility(n, p)
    if verdict.regime is not Regime.SUBCRITICAL:
        raise SupercriticalRefusedError(
            f"shooting refused for n={n}, p={p}: exponent {verdict.critical_exponent:g} is "
            f"{'reached' if verdict.regime is Regime.CRITICAL else 'exceeded'}",
            regime=verdict.regime.value,
        )

    zero = _first_zero(_ball_deriv(n, p, 1.0), 0.0, 1.0, 0.0, step, R_MAX)
    if zero is None:
        raise NoZeroFoundError(f"profile for n={n}, p={p} stays positive up to r={R_MAX:g}")
    lam = zero * zero

    if p == 2.0:

        def miss(trial: float) -> float:
            hit = _first_zero(_ball_deriv(n, 2.0, trial), 0.0, 1.0, 0.0, step, 3.0)
            return (3.0 if hit is None else hit) - 1.0

        lam = brentq(miss, *_bracket(miss, lam, what="ball eigenvalue"), xtol=tol, rtol=4 * np.finfo(float).eps)

    deriv = _ball_deriv(n, p, lam)
    count = int(round(1.0 / step))
    path = _integrate(deriv, 0.0, 1.0, 0.0, step, count)
    fine = _integrate(deriv, 0.0, 1.0, 0.0, step / 2.0, 2 * count)
    first_zero = _first_zero(deriv, 0.0, 1.0, 0.0, step, 3.0)
    residual = float(path.y[-1])
    u = path.y.copy()
    u[-1] = 0.0
    logger.info("shoot_ball: n=%d p=%g lambda=%.12g residual=%.2e", n, p, lam, residual)
    return RadialProfile(
        n=n,
        p=float(p),
        lam=float(lam),
        x=path.t,
        u=u,
        du=path.dy,
        first_zero=float(first_zero if first_zero is not None else math.nan),
        boundary_residual=abs(residual),
        richardson_error=float(np.max(np.abs(path.y - fine.y[::2]))),
    )


def calibrate(profile: RadialProfile, lam_target: float) -> RadialProfile:
    """Rescale the amplitude so the profile solves the equation with ``lam_target``.

    For p = 2 the multiplier is amplitude-free and the profile is returned unchanged.
    """

    if profile.p == 2.0:
        return profile
    k = (lam_target / profile.lam) ** (1.0 / (2.0 - profile.p))
    return replace(profile, lam=float(lam_target), u=profile.u * k, du=profile.du * k)


def radial_c_p(profile: RadialProfile) -> float:
    """Λ (∫u^p)^{(p-2)/p} with composite Simpson on the stored samples."""

    powered = np.clip(profile.u, 0.0, None) ** profile.p
    if profile.n == 1:
        integral = simpson(powered, x=profile.x)
    else:
        n = profile.n
        integral = n * ball_volume(n) * simpson(powered * profile.x ** (n - 1), x=profile.x)
    return float(profile.lam * integral ** ((profile.p - 2.0) / profile.p))


def energy_slab(u: float, u_prime: float, p: float, lam: float) -> float:
    """(u')^2 + (2Λ/p) u^p."""

    if u < 0:
        raise InvalidInputError("the slab energy is defined for u >= 0")
    return u_prime * u_prime + 2.0 * lam / p * u**p


def energy_ball_critical(
    v: float,
    v_dot: float,
    n: int,
    lam: float,
    variant: EnergyVariant | str = EnergyVariant.CONSERVED,
) -> float:
    """Energy of the critical-exponent ODE in t = -log r.

    ``printed`` carries the printed -(n-2)^2/2 coefficient of v^2, ``conserved`` the
    -(n-2)^2/8 that makes it a first integral of v'' - ((n-2)/2)^2 v + Λ v^{(n+2)/(n-2)} = 0.
    """

    if n < 3:
        raise InvalidInputError(f"the critical exponent needs n >= 3, got {n}")
    variant = EnergyVariant(variant)
    quadratic = (n - 2) ** 2 / (2.0 if variant is EnergyVariant.PRINTED else 8.0)
    exponent = 2.0 * n / (n - 2)
    return 0.5 * v_dot * v_dot - quadratic * v * v + (n - 2) * lam / (2.0 * n) * abs(v) ** exponent


def integrate_slab_ode(
    u0: float,
    du0: float,
    p: float,
    lam: float,
    x_end: float,
    step: float = DEFAULT_STEP,
) -> Trajectory:
    count = max(1, int(round(x_end / step)))
    return _integrate(_slab_deriv(p, lam), 0.0, u0, du0, step, count)


def integrate_critical_ode(
    v0: float,
    v_dot0: float,
    n: int,
    lam: float,
    t_end: float,
    step: float = DEFAULT_STEP,
) -> Trajectory:
    """RK4 trajectory of v'' = ((n-2)/2)^2 v - Λ v^{(n+2)/(n-2)}."""

    if n < 3:
        raise InvalidInputError(f"the critical exponent needs n >= 3, got {n}")
    linear = ((n - 2) / 2.0) ** 2
    exponent = (n + 2) / (n - 2)

    def deriv(_t: float, v: float, _w: float) -> float:
        return linear * v - lam * _power(v, exponent)

    count = max(1, int(round(t_end / step)))
    return _integrate(deriv, 0.0, v0, v_dot0, step, count)


def energy_drift(trajectory: Trajectory, energy: Callable[[float, float], float]) -> float:
    """max |E(t) - E(0)| along a trajectory."""

    values = np.array([energy(float(a), float(b)) for a, b in zip(trajectory.y, trajectory.dy)])
    return float(np.max(np.abs(values - values[0])))
