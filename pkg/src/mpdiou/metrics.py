"""Scalar box-similarity metrics: IoU, GIoU, DIoU, CIoU, EIoU, MPDIoU.

Each function takes a ground-truth box and a predicted box (plus image
dims for MPDIoU) and returns a MetricResult carrying the value together
with every intermediate scalar, so callers can audit the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import DegenerateAspect, DegenerateEnclosure, DegenerateGroundTruth
from .geometry import BBox, ImageDims, area, enclosing_box, intersection_area


class MetricKind(str, Enum):
    IOU = "iou"
    GIOU = "giou"
    DIOU = "diou"
    CIOU = "ciou"
    EIOU = "eiou"
    MPDIOU = "mpdiou"

    @property
    def needs_image(self) -> bool:
        return self is MetricKind.MPDIOU


@dataclass(frozen=True)
class MetricResult:
    value: float
    terms: dict[str, float] = field(default_factory=dict)


def _check_gt(gt: BBox) -> float:
    a = area(gt)
    if a <= 0:
        raise DegenerateGroundTruth(f"ground-truth box {gt.as_tuple()} has zero area")
    return a


def _iou_terms(gt: BBox, prd: BBox) -> dict[str, float]:
    a_gt = _check_gt(gt)
    a_prd = area(prd)
    inter = intersection_area(gt, prd)
    union = a_gt + a_prd - inter
    return {
        "area_gt": a_gt,
        "area_prd": a_prd,
        "intersection": inter,
        "union": union,
        "iou": inter / union,
    }


def iou(gt: BBox, prd: BBox) -> MetricResult:
    terms = _iou_terms(gt, prd)
    return MetricResult(terms["iou"], terms)


def giou(gt: BBox, prd: BBox) -> MetricResult:
    terms = _iou_terms(gt, prd)
    c = enclosing_box(gt, prd)
    c_area = area(c)
    terms["enclosing_area"] = c_area
    value = terms["iou"] - (c_area - terms["union"]) / c_area
    return MetricResult(value, terms)


def _center_distance_terms(gt: BBox, prd: BBox, terms: dict[str, float]) -> BBox:
    """Add squared center distance and squared enclosing diagonal; returns C."""
    c = enclosing_box(gt, prd)
    cw = c.x2 - c.x1
    ch = c.y2 - c.y1
    diag_sq = cw * cw + ch * ch
    if diag_sq <= 0:
        raise DegenerateEnclosure("enclosing box has zero diagonal")
    dx = (prd.x1 + prd.x2) / 2.0 - (gt.x1 + gt.x2) / 2.0
    dy = (prd.y1 + prd.y2) / 2.0 - (gt.y1 + gt.y2) / 2.0
    terms["center_dist_sq"] = dx * dx + dy * dy
    terms["enclosing_diag_sq"] = diag_sq
    terms["enclosing_w"] = cw
    terms["enclosing_h"] = ch
    return c


def diou(gt: BBox, prd: BBox) -> MetricResult:
    terms = _iou_terms(gt, prd)
    _center_distance_terms(gt, prd, terms)
    value = terms["iou"] - terms["center_dist_sq"] / terms["enclosing_diag_sq"]
    return MetricResult(value, terms)


def ciou(gt: BBox, prd: BBox) -> MetricResult:
    terms = _iou_terms(gt, prd)
    _center_distance_terms(gt, prd, terms)
    w_gt, h_gt = gt.width, gt.height
    w_prd, h_prd = prd.width, prd.height
    if w_gt <= 0 or h_gt <= 0 or w_prd <= 0 or h_prd <= 0:
        raise DegenerateAspect("zero width or height; aspect term undefined")
    v = (4.0 / math.pi**2) * (math.atan(w_gt / h_gt) - math.atan(w_prd / h_prd)) ** 2
    alpha = v / (1.0 - terms["iou"] + v) if v > 0 else 0.0
    terms["aspect_v"] = v
    terms["aspect_alpha"] = alpha
    value = (
        terms["iou"]
        - terms["center_dist_sq"] / terms["enclosing_diag_sq"]
        - alpha * v
    )
    return MetricResult(value, terms)


def eiou(gt: BBox, prd: BBox) -> MetricResult:
    terms = _iou_terms(gt, prd)
    _center_distance_terms(gt, prd, terms)
    cw, ch = terms["enclosing_w"], terms["enclosing_h"]
    if cw <= 0 or ch <= 0:
        raise DegenerateEnclosure("enclosing box has a zero extent")
    dw = prd.width - gt.width
    dh = prd.height - gt.height
    terms["width_diff_sq"] = dw * dw
    terms["height_diff_sq"] = dh * dh
    value = (
        terms["iou"]
        - terms["center_dist_sq"] / terms["enclosing_diag_sq"]
        - dw * dw / (cw * cw)
        - dh * dh / (ch * ch)
    )
    return MetricResult(value, terms)


def mpdiou(gt: BBox, prd: BBox, img: ImageDims) -> MetricResult:
    terms = _iou_terms(gt, prd)
    d1_sq = (prd.x1 - gt.x1) ** 2 + (prd.y1 - gt.y1) ** 2
    d2_sq = (prd.x2 - gt.x2) ** 2 + (prd.y2 - gt.y2) ** 2
    norm = img.diag_sq
    terms["d1_sq"] = d1_sq
    terms["d2_sq"] = d2_sq
    terms["img_diag_sq"] = norm
    value = terms["iou"] - d1_sq / norm - d2_sq / norm
    return MetricResult(value, terms)


def compute(
    kind: MetricKind, gt: BBox, prd: BBox, img: Optional[ImageDims] = None
) -> MetricResult:
    """Dispatch to the metric named by ``kind``.

    ``img`` is required for MPDIoU and ignored otherwise.
    """
    if kind is MetricKind.MPDIOU:
        if img is None:
            raise ValueError("mpdiou requires image dims")
        return mpdiou(gt, prd, img)
    fn = {
        MetricKind.IOU: iou,
        MetricKind.GIOU: giou,
        MetricKind.DIOU: diou,
        MetricKind.CIOU: ciou,
        MetricKind.EIOU: eiou,
    }[kind]
    return fn(gt, prd)
