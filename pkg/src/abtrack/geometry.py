"""Axis-aligned boxes, frame borders, and qualitative spatial relations.

Everything here is a pure function on immutable values.  The tolerance
``eps`` decides when two coordinates count as coincident, so boundary
relations (EC, TPP, EQ) are actually reachable on float pixel data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "DEFAULT_EPS",
    "Point2D",
    "Box2D",
    "FrameBounds",
    "Rcc8Relation",
    "Border",
    "rcc8_relation",
    "border_contact",
    "interpolate_box",
    "iou",
]

DEFAULT_EPS = 0.5


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Point2D:
    """A point in pixel coordinates."""

    x: float
    y: float

    def __post_init__(self) -> None:
        _require_finite("x", self.x)
        _require_finite("y", self.y)


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned rectangle: top-left corner plus positive width and height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            _require_finite(name, getattr(self, name))
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate box: w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> Point2D:
        return Point2D(self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class FrameBounds:
    """Visible frame extent plus the margin strip used for border contact."""

    width: float
    height: float
    border_margin: float = 20.0

    def __post_init__(self) -> None:
        for name in ("width", "height", "border_margin"):
            _require_finite(name, getattr(self, name))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame must have positive extent")
        if self.border_margin < 0:
            raise ValueError("border_margin must be >= 0")
        if self.border_margin >= min(self.width, self.height) / 2.0:
            raise ValueError("border_margin must be < min(width, height) / 2")


class Rcc8Relation(Enum):
    """The eight jointly exhaustive, pairwise disjoint region relations."""

    DC = "DC"
    EC = "EC"
    PO = "PO"
    EQ = "EQ"
    TPP = "TPP"
    NTPP = "NTPP"
    TPPi = "TPPi"
    NTPPi = "NTPPi"

    def converse(self) -> "Rcc8Relation":
        return _CONVERSE[self]

    def __str__(self) -> str:  # pragma: no cover - repr sugar
        return self.value


_CONVERSE = {
    Rcc8Relation.DC: Rcc8Relation.DC,
    Rcc8Relation.EC: Rcc8Relation.EC,
    Rcc8Relation.PO: Rcc8Relation.PO,
    Rcc8Relation.EQ: Rcc8Relation.EQ,
    Rcc8Relation.TPP: Rcc8Relation.TPPi,
    Rcc8Relation.NTPP: Rcc8Relation.NTPPi,
    Rcc8Relation.TPPi: Rcc8Relation.TPP,
    Rcc8Relation.NTPPi: Rcc8Relation.NTPP,
}


class Border(Enum):
    """One of the four frame borders, in fixed tie-break order."""

    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"

    @property
    def token(self) -> str:
        return self.value


def rcc8_relation(a: Box2D, b: Box2D, eps: float = DEFAULT_EPS) -> Rcc8Relation:
    """Classify the relation between two boxes.

    ``eps`` is the coincidence tolerance: coordinate pairs closer than
    ``eps`` count as equal, overlaps of at most ``eps`` count as boundary
    contact.  Exactly one relation is returned for any box pair, and
    ``rcc8_relation(a, b)`` is always the converse of ``rcc8_relation(b, a)``.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")

    dx1 = abs(a.x - b.x)
    dx2 = abs(a.x2 - b.x2)
    dy1 = abs(a.y - b.y)
    dy2 = abs(a.y2 - b.y2)
    if dx1 <= eps and dx2 <= eps and dy1 <= eps and dy2 <= eps:
        return Rcc8Relation.EQ

    overlap_x = min(a.x2, b.x2) - max(a.x, b.x)
    overlap_y = min(a.y2, b.y2) - max(a.y, b.y)
    if overlap_x < -eps or overlap_y < -eps:
        return Rcc8Relation.DC
    if overlap_x <= eps or overlap_y <= eps:
        return Rcc8Relation.EC

    a_in_b = (
        a.x >= b.x - eps and a.y >= b.y - eps and a.x2 <= b.x2 + eps and a.y2 <= b.y2 + eps
    )
    b_in_a = (
        b.x >= a.x - eps and b.y >= a.y - eps and b.x2 <= a.x2 + eps and b.y2 <= a.y2 + eps
    )
    touching = dx1 <= eps or dx2 <= eps or dy1 <= eps or dy2 <= eps
    if a_in_b:
        return Rcc8Relation.TPP if touching else Rcc8Relation.NTPP
    if b_in_a:
        return Rcc8Relation.TPPi if touching else Rcc8Relation.NTPPi
    return Rcc8Relation.PO


def border_contact(box: Box2D, frame: FrameBounds) -> Border | None:
    """Return the frame border whose margin strip the box intersects.

    Ties are broken in the fixed order left, right, top, bottom.  Returns
    ``None`` for boxes farther than ``border_margin`` from every edge.
    """
    m = frame.border_margin
    if box.x <= m and box.x2 >= 0:
        return Border.LEFT
    if box.x2 >= frame.width - m and box.x <= frame.width:
        return Border.RIGHT
    if box.y <= m and box.y2 >= 0:
        return Border.TOP
    if box.y2 >= frame.height - m and box.y <= frame.height:
        return Border.BOTTOM
    return None


def interpolate_box(b1: Box2D, t1: int, b2: Box2D, t2: int, t: int) -> Box2D:
    """Linearly interpolate every coordinate of a box between two frames.

    The endpoints are reproduced exactly: the blend is computed as
    ``(1 - u) * b1 + u * b2`` so no rounding creeps in at u = 0 or u = 1.
    """
    if t1 >= t2:
        raise ValueError(f"need t1 < t2, got t1={t1}, t2={t2}")
    if t < t1 or t > t2:
        raise ValueError(f"t={t} outside [{t1}, {t2}]")
    u = (t - t1) / (t2 - t1)
    v = 1.0 - u
    return Box2D(
        v * b1.x + u * b2.x,
        v * b1.y + u * b2.y,
        v * b1.w + u * b2.w,
        v * b1.h + u * b2.h,
    )


def iou(a: Box2D, b: Box2D) -> float:
    """Intersection area over union area, in [0, 1].

    Areas are derived from the same edge subtractions as the intersection,
    which keeps the result exactly 1.0 for identical boxes and never above
    1.0 under float rounding.
    """
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a.x2 - a.x) * (a.y2 - a.y)
    area_b = (b.x2 - b.x) * (b.y2 - b.y)
    union = area_a + area_b - inter
    return inter / union
