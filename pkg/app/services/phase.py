"""Level sets of the slab and critical-ball energies in the (u, u') phase plane."""

from __future__ import annotations

import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from app.schemas.report import LevelSetManifest
from app.services.errors import InvalidInputError
from app.services.export import write_frame, write_json, write_text
from app.services.radial import EnergyVariant

logger = logging.getLogger(__name__)

__all__ = [
    "EnergySystem",
    "LevelSetData",
    "default_window",
    "phase_portrait",
    "write_level_sets",
]

LEVEL_TOLERANCE = 1e-9
_NEWTON_STEPS = 60
_SVG_SALT = "ptorsion-level-sets"


class EnergySystem(str, Enum):
    SLAB = "slab_energy"
    BALL_CRITICAL = "ball_critical_energy"


@dataclass(frozen=True)
class _Energy:
    """E(u, w) = kinetic * w^2 + V(u) with an even potential V."""

    kinetic: float
    quadratic: float
    power_coefficient: float
    exponent: float

    def potential(self, u: np.ndarray) -> np.ndarray:
        magnitude = np.abs(u)
        return self.quadratic * magnitude**2 + self.power_coefficient * magnitude**self.exponent

    def __call__(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        return self.kinetic * w * w + self.potential(u)

    def gradient(self, u: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        magnitude = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            power_term = np.where(
                magnitude > 0.0,
                self.power_coefficient * self.exponent * np.sign(u) * magnitude ** (self.exponent - 1.0),
                0.0,
            )
        return 2.0 * self.quadratic * u + power_term, 2.0 * self.kinetic * w

    def well_bottom(self) -> float:
        """Non-negative u minimizing V."""

        if self.quadratic >= 0.0:
            return 0.0
        return (-2.0 * self.quadratic / (self.power_coefficient * self.exponent)) ** (1.0 / (self.exponent - 2.0))


def _energy_for(system: EnergySystem, parameters: dict[str, Any]) -> _Energy:
    lam = float(parameters.get("lam", 1.0))
    required = "p" if system is EnergySystem.SLAB else "n"
    if parameters.get(required) is None:
        raise InvalidInputError(f"{system.value} needs the parameter '{required}'")
    if system is EnergySystem.SLAB:
        p = float(parameters["p"])
        if p < 1:
            raise InvalidInputError(f"p must be at least 1, got {p}")
        return _Energy(kinetic=1.0, quadratic=0.0, power_coefficient=2.0 * lam / p, exponent=p)
    n = int(parameters["n"])
    if n < 3:
        raise InvalidInputError(f"the critical system needs n >= 3, got {n}")
    try:
        variant = EnergyVariant(parameters.get("variant", EnergyVariant.CONSERVED))
    except ValueError:
        raise InvalidInputError(f"unknown energy variant '{parameters.get('variant')}'") from None
    quadratic = (n - 2) ** 2 / (2.0 if variant is EnergyVariant.PRINTED else 8.0)
    return _Energy(
        kinetic=0.5,
        quadratic=-quadratic,
        power_coefficient=(n - 2) * lam / (2.0 * n),
        exponent=2.0 * n / (n - 2),
    )


@dataclass(frozen=True)
class LevelSetData:
    system: EnergySystem
    parameters: dict[str, Any]
    levels: list[float]
    window: tuple[tuple[float, float], tuple[float, float]]
    curves: list[list[np.ndarray]] = field(default_factory=list)

    def point_counts(self) -> list[int]:
        return [sum(len(polyline) for polyline in per_level) for per_level in self.curves]

    def max_level_error(self) -> float:
        energy = _energy_for(self.system, self.parameters)
        worst = 0.0
        for level, per_level in zip(self.levels, self.curves):
            for polyline in per_level:
                if len(polyline):
                    worst = max(worst, float(np.max(np.abs(energy(polyline[:, 0], polyline[:, 1]) - level))))
        return worst


def default_window(system: EnergySystem, parameters: dict[str, Any], levels: Sequence[float]):
    """Box around the largest requested level with a 25% margin."""

    energy = _energy_for(system, parameters)
    top = max(levels)
    bottom = energy.well_bottom()
    floor = float(energy.potential(np.asarray(bottom)))
    if top <= floor:
        return (-1.0, 1.0), (-1.0, 1.0)

    upper = max(1.0, 2.0 * bottom)
    while float(energy.potential(np.asarray(upper))) < top:
        upper *= 2.0
    u_extent = brentq(lambda s: float(energy.potential(np.asarray(s))) - top, bottom, upper)
    w_extent = math.sqrt((top - min(floor, 0.0)) / energy.kinetic)
    return (-1.25 * u_extent, 1.25 * u_extent), (-1.25 * w_extent, 1.25 * w_extent)


def _polish(energy: _Energy, level: float, points: np.ndarray) -> np.ndarray:
    """Newton steps along the gradient onto E = level; drops points that miss the tolerance."""

    u = points[:, 0].astype(float).copy()
    w = points[:, 1].astype(float).copy()
    for _ in range(_NEWTON_STEPS):
        defect = energy(u, w) - level
        pending = np.abs(defect) > 0.01 * LEVEL_TOLERANCE
        if not pending.any():
            break
        gu, gw = energy.gradient(u, w)
        norm2 = gu * gu + gw * gw
        movable = pending & (norm2 > 0.0)
        factor = np.zeros_like(u)
        factor[movable] = defect[movable] / norm2[movable]
        u -= factor * gu
        w -= factor * gw
    keep = np.abs(energy(u, w) - level) <= LEVEL_TOLERANCE
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.warning("dropped %d contour vertices that did not reach level %.6g", dropped, level)
    return np.column_stack([u[keep], w[keep]])


def _trace(u_axis: np.ndarray, w_axis: np.ndarray, values: np.ndarray, level: float) -> list[np.ndarray]:
    from matplotlib.figure import Figure

    figure = Figure()
    axes = figure.subplots()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        contour = axes.contour(u_axis, w_axis, values.T, levels=[level])
        try:
            segments = contour.allsegs[0]
        except (AttributeError, IndexError):
            paths = contour.get_paths()
            segments = paths[0].to_polygons(closed_only=False) if paths else []
    return [np.asarray(segment, dtype=float) for segment in segments if len(segment)]


def phase_portrait(
    system: EnergySystem | str,
    parameters: dict[str, Any],
    levels: Sequence[float],
    window: Optional[tuple[tuple[float, float], tuple[float, float]]] = None,
    resolution: int = 401,
) -> LevelSetData:
    """Marching-squares contours of E, each vertex refined onto its level."""

    try:
        system = EnergySystem(system)
    except ValueError:
        raise InvalidInputError(f"unknown energy system '{system}'") from None
    levels = [float(level) for level in levels]
    if not levels or not all(math.isfinite(level) for level in levels):
        raise InvalidInputError("levels must be a non-empty list of finite numbers")
    if resolution < 3:
        raise InvalidInputError("resolution must be at least 3")
    energy = _energy_for(system, parameters)
    if window is None:
        window = default_window(system, parameters, levels)
    (u_lo, u_hi), (w_lo, w_hi) = window
    if not (u_hi > u_lo and w_hi > w_lo):
        raise InvalidInputError(f"degenerate window {window}")

    u_axis = np.linspace(u_lo, u_hi, resolution)
    w_axis = np.linspace(w_lo, w_hi, resolution)
    grid_u, grid_w = np.meshgrid(u_axis, w_axis, indexing="ij")
    values = energy(grid_u, grid_w)
    low, high = float(values.min()), float(values.max())

    curves: list[list[np.ndarray]] = []
    for level in levels:
        if level < low or level > high:
            curves.append([])
            continue
        polished = [_polish(energy, level, segment) for segment in _trace(u_axis, w_axis, values, level)]
        curves.append([segment for segment in polished if len(segment)])
    logger.info(
        "phase_portrait %s %s: %d levels, %d points",
        system.value, parameters, len(levels), sum(len(s) for c in curves for s in c),
    )
    return LevelSetData(
        system=system,
        parameters=dict(parameters),
        levels=levels,
        window=((float(u_lo), float(u_hi)), (float(w_lo), float(w_hi))),
        curves=curves,
    )


def _render_svg(data: LevelSetData) -> str:
    import matplotlib
    from matplotlib.figure import Figure

    figure = Figure(figsize=(6.0, 6.0))
    axes = figure.subplots()
    for level, per_level in zip(data.levels, data.curves):
        for index, polyline in enumerate(per_level):
            axes.plot(polyline[:, 0], polyline[:, 1], linewidth=0.8, label=f"E = {level:g}" if index == 0 else None)
    (u_lo, u_hi), (w_lo, w_hi) = data.window
    axes.set_xlim(u_lo, u_hi)
    axes.set_ylim(w_lo, w_hi)
    axes.set_xlabel("u")
    axes.set_ylabel("u'")
    axes.set_title(data.system.value)
    if any(data.curves):
        axes.legend(loc="upper right", fontsize="small")
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "none"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def write_level_sets(data: LevelSetData, out_dir: Path, emit_svg: bool = False) -> LevelSetManifest:
    """One CSV per level (segment, u, du), a manifest JSON and optionally an SVG."""

    out_dir = Path(out_dir)
    files: list[str] = []
    for index, (level, per_level) in enumerate(zip(data.levels, data.curves)):
        frames = [
            pd.DataFrame({"segment": segment_index, "u": polyline[:, 0], "du": polyline[:, 1]})
            for segment_index, polyline in enumerate(per_level)
        ]
        frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["segment", "u", "du"])
        name = f"level_{index:02d}.csv"
        write_frame(out_dir / name, frame, [f"system={data.system.value}", f"level={level!r}"])
        files.append(name)

    svg_name = None
    if emit_svg:
        svg_name = "level_sets.svg"
        write_text(out_dir / svg_name, _render_svg(data))

    manifest = LevelSetManifest(
        system=data.system.value,
        parameters={key: (value.value if isinstance(value, Enum) else value) for key, value in data.parameters.items()},
        levels=data.levels,
        curve_files=files,
        point_counts=data.point_counts(),
        max_level_error=data.max_level_error(),
        svg_file=svg_name,
    )
    write_json(out_dir / "manifest.json", manifest)
    return manifest
