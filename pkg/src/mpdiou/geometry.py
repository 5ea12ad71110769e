"""Axis-aligned rectangle primitives.

All operations are pure functions over immutable values and use plain
64-bit floating point with no epsilon adjustments, so min/max/multiply
results stay exact wherever the inputs are representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NonFiniteCoordinate


@dataclass(frozen=True)
class BBox:
    """Rectangle in corner form: top-left (x1, y1), bottom-right (x2, y2).

    Canonical boxes satisfy x2 >= x1 and y2 >= y1; zero-area boxes are
    legal (predictions may collapse during optimization).
    """

    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class ImageDims:
    """Pixel extents of the image the boxes live in."""

    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"image dims must be positive, got {self.w}x{self.h}")

    @property
    def diag_sq(self) -> float:
        """Squared image diagonal, the corner-distance normalizer."""
        return self.w * self.w + self.h * self.h


@dataclass(frozen=True)
class CenterForm:
    """Rectangle as center (xc, yc) plus width/height (bw, bh)."""

    xc: float
    yc: float
    bw: float
    bh: float


def canonicalize(coords: Sequence[float]) -> BBox:
    """Build a canonical BBox from raw (x1, y1, x2, y2), swapping corners if
    they arrived inverted.

    Raises NonFiniteCoordinate on NaN/Inf input.  Degenerate (zero width or
    height) boxes pass through unchanged.
    """
    x1, y1, x2, y2 = (float(c) for c in coords)
    for c in (x1, y1, x2, y2):
        if not math.isfinite(c):
            raise NonFiniteCoordinate(f"non-finite coordinate in {coords!r}")
    if x2 < x1:
        x1, x2 = x2, x1
    if y2 < y1:
        y1, y2 = y2, y1
    return BBox(x1, y1, x2, y2)


def area(b: BBox) -> float:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def intersection_area(a: BBox, b: BBox) -> float:
    """Overlap area of two canonical boxes; 0 when they touch or are disjoint."""
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw > 0 and ih > 0:
        return iw * ih
    return 0.0


def enclosing_box(a: BBox, b: BBox) -> BBox:
    """Smallest axis-aligned rectangle containing both boxes."""
    return BBox(
        min(a.x1, b.x1),
        min(a.y1, b.y1),
        max(a.x2, b.x2),
        max(a.y2, b.y2),
    )


def to_center_form(b: BBox) -> CenterForm:
    return CenterForm(
        (b.x1 + b.x2) / 2.0,
        (b.y1 + b.y2) / 2.0,
        b.x2 - b.x1,
        b.y2 - b.y1,
    )


def from_center_form(c: CenterForm) -> BBox:
    return BBox(
        c.xc - c.bw / 2.0,
        c.yc - c.bh / 2.0,
        c.xc + c.bw / 2.0,
        c.yc + c.bh / 2.0,
    )
