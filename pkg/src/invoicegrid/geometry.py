"""Axis-aligned boxes in page coordinates and the overlap measures built on them.

Coordinate convention used everywhere in this package: origin at the top-left
of the page, x grows right, y grows down, units are PDF points (1/72 inch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle with strictly positive area.

    Degenerate boxes (zero or negative width/height) and non-finite
    coordinates are rejected at construction; clamping them silently would
    hide template bugs downstream.
    """

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"BBox.{name} must be finite, got {v!r}")
        if not self.x0 < self.x1:
            raise ValueError(f"BBox requires x0 < x1, got x0={self.x0}, x1={self.x1}")
        if not self.y0 < self.y1:
            raise ValueError(f"BBox requires y0 < y1, got y0={self.y0}, y1={self.y1}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    def shifted(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)

    def contains(self, other: "BBox", eps: float = 1e-6) -> bool:
        """True when `other` lies inside this box (within `eps` slack)."""
        return (
            other.x0 >= self.x0 - eps
            and other.y0 >= self.y0 - eps
            and other.x1 <= self.x1 + eps
            and other.y1 <= self.y1 + eps
        )

    def intersects(self, other: "BBox") -> bool:
        return intersection_area(self, other) > 0.0


def intersection_area(a: BBox, b: BBox) -> float:
    """Area of the overlap of two boxes; 0.0 when they are disjoint."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def overlap_fraction(word_box: BBox, region: BBox) -> float:
    """Fraction of `word_box`'s area covered by `region`, in [0, 1].

    This is deliberately asymmetric: it measures how much of the *word* lies
    inside the region, which is what decides whether a word is assigned to a
    predicted field region.
    """
    return intersection_area(word_box, region) / word_box.area


def union_bbox(boxes: list[BBox]) -> BBox:
    """Tight bounding box of a non-empty list of boxes."""
    if not boxes:
        raise ValueError("union_bbox requires at least one box")
    return BBox(
        min(b.x0 for b in boxes),
        min(b.y0 for b in boxes),
        max(b.x1 for b in boxes),
        max(b.y1 for b in boxes),
    )


def instance_iou(boxes_a: list[BBox], boxes_b: list[BBox]) -> float:
    """IoU between two box unions.

    Boxes within each list must be pairwise disjoint (field instances and
    connected components both satisfy this), which makes the union areas and
    the cross intersection exact by simple summation.
    """
    area_a = sum(b.area for b in boxes_a)
    area_b = sum(b.area for b in boxes_b)
    inter = sum(intersection_area(a, b) for a in boxes_a for b in boxes_b)
    union = area_a + area_b - inter
    if union <= 0.0 or inter == 0.0:
        return 0.0
    return inter / union
