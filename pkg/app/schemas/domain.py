"""Schemas describing the domains the solvers operate on."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, TypeAdapter, ValidationError, model_validator

from app.services.errors import InvalidDomainError

__all__ = [
    "Annulus",
    "Ball",
    "Disk",
    "DomainSpec",
    "GRID_KINDS",
    "Polygon",
    "Rectangle",
    "Slab",
    "load_domain",
    "parse_domain",
]

GRID_KINDS = frozenset({"disk", "rectangle", "polygon", "annulus"})


class _DomainBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Disk(_DomainBase):
    """Round disk of the given radius centred at the origin."""

    kind: Literal["disk"] = "disk"
    radius: PositiveFloat = Field(..., description="Disk radius.")
    n: Literal[2] = Field(2, description="Ambient dimension (planar).")


class Rectangle(_DomainBase):
    """Axis-aligned rectangle (-a, a) x (-b, b)."""

    kind: Literal["rectangle"] = "rectangle"
    half_widths: tuple[PositiveFloat, PositiveFloat] = Field(
        ..., description="Half-widths (a, b) along x and y."
    )
    n: Literal[2] = 2


class Polygon(_DomainBase):
    """Simple polygon given by its vertices in order (either orientation)."""

    kind: Literal["polygon"] = "polygon"
    vertices: list[tuple[float, float]] = Field(..., min_length=3)
    n: Literal[2] = 2

    @model_validator(mode="after")
    def _check_simple(self) -> "Polygon":
        vertices = self.vertices
        if len({tuple(v) for v in vertices}) != len(vertices):
            raise ValueError("polygon vertices must be distinct")
        if abs(_signed_area(vertices)) == 0.0:
            raise ValueError("polygon has zero area")

        count = len(vertices)
        edges = [(vertices[k], vertices[(k + 1) % count]) for k in range(count)]
        for first in range(count):
            for second in range(first + 1, count):
                adjacent = second == first + 1 or (first == 0 and second == count - 1)
                if adjacent:
                    continue
                if _segments_intersect(*edges[first], *edges[second]):
                    raise ValueError(f"polygon edges {first} and {second} intersect")
        return self


class Annulus(_DomainBase):
    """Planar ring r_in < |x| < r_out."""

    kind: Literal["annulus"] = "annulus"
    r_in: PositiveFloat
    r_out: PositiveFloat
    n: Literal[2] = 2

    @model_validator(mode="after")
    def _check_order(self) -> "Annulus":
        if self.r_in >= self.r_out:
            raise ValueError("annulus requires r_in < r_out")
        return self


class Ball(_DomainBase):
    """Round ball of radius ``radius`` in R^n."""

    kind: Literal["ball"] = "ball"
    n: int = Field(..., ge=2)
    radius: PositiveFloat


class Slab(_DomainBase):
    """Infinite slab {|x_n| < half_width} in R^n."""

    kind: Literal["slab"] = "slab"
    n: int = Field(..., ge=2)
    half_width: PositiveFloat


DomainSpec = Annotated[
    Union[Disk, Rectangle, Polygon, Annulus, Ball, Slab],
    Field(discriminator="kind"),
]

_DOMAIN_ADAPTER: TypeAdapter[DomainSpec] = TypeAdapter(DomainSpec)


def parse_domain(payload: object) -> DomainSpec:
    """Validate a mapping (or JSON string) into a :data:`DomainSpec`."""

    try:
        if isinstance(payload, (str, bytes)):
            return _DOMAIN_ADAPTER.validate_json(payload)
        return _DOMAIN_ADAPTER.validate_python(payload)
    except ValidationError as exc:
        raise InvalidDomainError(f"invalid domain description: {exc.errors()[0]['msg']}") from exc


def load_domain(path: str | Path) -> DomainSpec:
    """Read a single-object domain file."""

    try:
        raw = Path(path).expanduser().read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidDomainError(f"cannot read domain file {path}") from exc
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidDomainError(f"domain file {path} is not valid JSON") from exc
    return parse_domain(payload)


def _signed_area(vertices: list[tuple[float, float]]) -> float:
    total = 0.0
    for (x0, y0), (x1, y1) in zip(vertices, vertices[1:] + vertices[:1]):
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def _orientation(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c) -> bool:
    return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _orientation(q1, q2, p1)
    d2 = _orientation(q1, q2, p2)
    d3 = _orientation(p1, p2, q1)
    d4 = _orientation(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    # touching or collinear overlap
    return (
        (d1 == 0 and _on_segment(q1, q2, p1))
        or (d2 == 0 and _on_segment(q1, q2, p2))
        or (d3 == 0 and _on_segment(p1, p2, q1))
        or (d4 == 0 and _on_segment(p1, p2, q2))
    )
