"""Loss wrappers (1 - metric), analytic gradients, and an FD oracle.

Gradients are taken with respect to the predicted box's corner
coordinates; the ground truth and image dims are constants.  Min/max
selections make the losses piecewise smooth: at a tie the one-sided
derivatives disagree, so ``gradient`` raises NonSmoothPoint instead of
returning one branch silently.  The CIoU aspect weight alpha is treated
as a constant during differentiation; ``fd_gradient`` freezes it the
same way so the oracle checks the same function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DegenerateAspect, NonSmoothPoint
from .geometry import BBox, ImageDims, area
from .metrics import MetricKind, compute

#: Coordinate-difference tolerance below which a min/max tie is declared.
TIE_TOL = 1e-9

#: Default central-difference step, sized for pixel-scale coordinates.
#: Scale it with the coordinate magnitude if boxes live on another unit.
DEFAULT_FD_STEP = 1e-6

_Vec4 = tuple[float, float, float, float]


@dataclass(frozen=True)
class LossSpec:
    """Which loss to evaluate; ``img`` is required exactly for MPDIoU."""

    kind: MetricKind
    img: Optional[ImageDims] = None

    def __post_init__(self):
        if self.kind.needs_image and self.img is None:
            raise ValueError("mpdiou loss requires image dims")
        if not self.kind.needs_image and self.img is not None:
            raise ValueError(f"{self.kind.value} loss takes no image dims")


@dataclass(frozen=True)
class LossGradient:
    """Partial derivatives of the loss w.r.t. the predicted corners."""

    d_x1: float
    d_y1: float
    d_x2: float
    d_y2: float

    def as_tuple(self) -> _Vec4:
        return (self.d_x1, self.d_y1, self.d_x2, self.d_y2)


def loss(spec: LossSpec, gt: BBox, prd: BBox) -> float:
    return 1.0 - compute(spec.kind, gt, prd, spec.img).value


def _add(a: _Vec4, b: _Vec4, scale: float = 1.0) -> _Vec4:
    return tuple(x + scale * y for x, y in zip(a, b))  # type: ignore[return-value]


def _find_ties(gt: BBox, prd: BBox, uses_enclosure: bool) -> tuple[str, ...]:
    """Names of predicted coordinates whose min/max selection is tied."""
    tied = []
    corner_pairs = [
        ("x1", prd.x1 - gt.x1),
        ("y1", prd.y1 - gt.y1),
        ("x2", prd.x2 - gt.x2),
        ("y2", prd.y2 - gt.y2),
    ]
    iw = min(gt.x2, prd.x2) - max(gt.x1, prd.x1)
    ih = min(gt.y2, prd.y2) - max(gt.y1, prd.y1)
    overlapping = iw > 0 and ih > 0
    for name, diff in corner_pairs:
        if abs(diff) <= TIE_TOL and (uses_enclosure or overlapping):
            tied.append(name)
    # Touching boxes: the intersection term kinks between zero and positive.
    if abs(iw) <= TIE_TOL and ih > TIE_TOL:
        tied.extend(("x1", "x2"))
    if abs(ih) <= TIE_TOL and iw > TIE_TOL:
        tied.extend(("y1", "y2"))
    if abs(iw) <= TIE_TOL and abs(ih) <= TIE_TOL:
        tied.extend(("x1", "y1", "x2", "y2"))
    return tuple(dict.fromkeys(tied))


def _iou_with_grad(gt: BBox, prd: BBox) -> tuple[float, _Vec4, float, _Vec4]:
    """Returns (iou, d_iou, union, d_union)."""
    wp = prd.x2 - prd.x1
    hp = prd.y2 - prd.y1
    iw = min(gt.x2, prd.x2) - max(gt.x1, prd.x1)
    ih = min(gt.y2, prd.y2) - max(gt.y1, prd.y1)
    if iw > 0 and ih > 0:
        inter = iw * ih
        d_inter = (
            -ih if prd.x1 > gt.x1 else 0.0,
            -iw if prd.y1 > gt.y1 else 0.0,
            ih if prd.x2 < gt.x2 else 0.0,
            iw if prd.y2 < gt.y2 else 0.0,
        )
    else:
        inter = 0.0
        d_inter = (0.0, 0.0, 0.0, 0.0)
    union = area(gt) + wp * hp - inter
    d_area = (-hp, -wp, hp, wp)
    d_union = _add(d_area, d_inter, -1.0)
    val = inter / union
    d_val = tuple(
        (di * union - inter * du) / (union * union)
        for di, du in zip(d_inter, d_union)
    )
    return val, d_val, union, d_union  # type: ignore[return-value]


def _enclosure_with_grad(gt: BBox, prd: BBox):
    """Returns (cw, ch, d_cw, d_ch) for the smallest enclosing box."""
    cw = max(gt.x2, prd.x2) - min(gt.x1, prd.x1)
    ch = max(gt.y2, prd.y2) - min(gt.y1, prd.y1)
    d_cw = (
        -1.0 if prd.x1 < gt.x1 else 0.0,
        0.0,
        1.0 if prd.x2 > gt.x2 else 0.0,
        0.0,
    )
    d_ch = (
        0.0,
        -1.0 if prd.y1 < gt.y1 else 0.0,
        0.0,
        1.0 if prd.y2 > gt.y2 else 0.0,
    )
    return cw, ch, d_cw, d_ch


def _center_penalty_grad(gt: BBox, prd: BBox, cw, ch, d_cw, d_ch) -> _Vec4:
    """Gradient of rho^2 / c^2 (the DIoU center-distance penalty)."""
    dx = (prd.x1 + prd.x2) / 2.0 - (gt.x1 + gt.x2) / 2.0
    dy = (prd.y1 + prd.y2) / 2.0 - (gt.y1 + gt.y2) / 2.0
    rho2 = dx * dx + dy * dy
    c2 = cw * cw + ch * ch
    d_rho2 = (dx, dy, dx, dy)
    d_c2 = tuple(2.0 * cw * a + 2.0 * ch * b for a, b in zip(d_cw, d_ch))
    return tuple(
        (dr * c2 - rho2 * dc) / (c2 * c2) for dr, dc in zip(d_rho2, d_c2)
    )  # type: ignore[return-value]


def _metric_grad(spec: LossSpec, gt: BBox, prd: BBox) -> _Vec4:
    kind = spec.kind
    iou_val, d_iou, union, d_union = _iou_with_grad(gt, prd)

    if kind is MetricKind.IOU:
        return d_iou

    if kind is MetricKind.MPDIOU:
        norm = spec.img.diag_sq  # type: ignore[union-attr]
        d_pen = (
            2.0 * (prd.x1 - gt.x1) / norm,
            2.0 * (prd.y1 - gt.y1) / norm,
            2.0 * (prd.x2 - gt.x2) / norm,
            2.0 * (prd.y2 - gt.y2) / norm,
        )
        return _add(d_iou, d_pen, -1.0)

    cw, ch, d_cw, d_ch = _enclosure_with_grad(gt, prd)

    if kind is MetricKind.GIOU:
        c_area = cw * ch
        d_c_area = tuple(ch * a + cw * b for a, b in zip(d_cw, d_ch))
        # GIoU = IoU - 1 + U/|C|
        d_ratio = tuple(
            (du * c_area - union * dc) / (c_area * c_area)
            for du, dc in zip(d_union, d_c_area)
        )
        return _add(d_iou, d_ratio)

    d_center = _center_penalty_grad(gt, prd, cw, ch, d_cw, d_ch)
    d_diou = _add(d_iou, d_center, -1.0)

    if kind is MetricKind.DIOU:
        return d_diou

    if kind is MetricKind.CIOU:
        wg, hg = gt.width, gt.height
        wp, hp = prd.width, prd.height
        if wg <= 0 or hg <= 0 or wp <= 0 or hp <= 0:
            raise DegenerateAspect("zero width or height; aspect term undefined")
        phi = math.atan(wg / hg) - math.atan(wp / hp)
        v = (4.0 / math.pi**2) * phi * phi
        alpha = v / (1.0 - iou_val + v) if v > 0 else 0.0
        coeff = (8.0 / math.pi**2) * phi
        dv_dwp = coeff * (-hp / (wp * wp + hp * hp))
        dv_dhp = coeff * (wp / (wp * wp + hp * hp))
        d_v = (-dv_dwp, -dv_dhp, dv_dwp, dv_dhp)
        return _add(d_diou, d_v, -alpha)

    if kind is MetricKind.EIOU:
        dw = prd.width - gt.width
        dh = prd.height - gt.height
        d_wp = (-1.0, 0.0, 1.0, 0.0)
        d_hp = (0.0, -1.0, 0.0, 1.0)
        d_pw = tuple(
            2.0 * dw * a / (cw * cw) - 2.0 * dw * dw * b / (cw**3)
            for a, b in zip(d_wp, d_cw)
        )
        d_ph = tuple(
            2.0 * dh * a / (ch * ch) - 2.0 * dh * dh * b / (ch**3)
            for a, b in zip(d_hp, d_ch)
        )
        out = _add(d_diou, d_pw, -1.0)
        return _add(out, d_ph, -1.0)

    raise ValueError(f"unknown metric kind {kind!r}")


def gradient(spec: LossSpec, gt: BBox, prd: BBox) -> LossGradient:
    """Analytic gradient of the loss at ``prd``.

    Raises NonSmoothPoint when a min/max selection is tied within
    TIE_TOL, naming the tied predicted coordinates.
    """
    # Evaluating the metric first enforces its preconditions.
    compute(spec.kind, gt, prd, spec.img)
    uses_enclosure = spec.kind in (
        MetricKind.GIOU,
        MetricKind.DIOU,
        MetricKind.CIOU,
        MetricKind.EIOU,
    )
    tied = _find_ties(gt, prd, uses_enclosure)
    if tied:
        raise NonSmoothPoint(
            f"tied min/max selection on {', '.join(tied)}", tied_coords=tied
        )
    d_metric = _metric_grad(spec, gt, prd)
    return LossGradient(*(-d for d in d_metric))


def _loss_frozen_alpha(spec: LossSpec, gt: BBox, prd: BBox, alpha: float) -> float:
    """CIoU loss with the aspect weight held at ``alpha``."""
    terms = compute(MetricKind.DIOU, gt, prd).terms
    wg, hg = gt.width, gt.height
    wp, hp = prd.width, prd.height
    if wp <= 0 or hp <= 0:
        raise DegenerateAspect("zero width or height; aspect term undefined")
    v = (4.0 / math.pi**2) * (math.atan(wg / hg) - math.atan(wp / hp)) ** 2
    value = terms["iou"] - terms["center_dist_sq"] / terms["enclosing_diag_sq"]
    return 1.0 - (value - alpha * v)


def fd_gradient(
    spec: LossSpec, gt: BBox, prd: BBox, step: float = DEFAULT_FD_STEP
) -> LossGradient:
    """Central-difference gradient of the loss, the independent oracle.

    For CIoU the aspect weight alpha is frozen at its base-point value,
    matching the analytic convention.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if spec.kind is MetricKind.CIOU:
        alpha = compute(MetricKind.CIOU, gt, prd).terms["aspect_alpha"]

        def f(box: BBox) -> float:
            return _loss_frozen_alpha(spec, gt, box, alpha)

    else:

        def f(box: BBox) -> float:
            return loss(spec, gt, box)

    base = prd.as_tuple()
    parts = []
    for i in range(4):
        plus = list(base)
        minus = list(base)
        plus[i] += step
        minus[i] -= step
        hi = f(BBox(*plus))
        lo = f(BBox(*minus))
        parts.append((hi - lo) / (2.0 * step))
    return LossGradient(*parts)
