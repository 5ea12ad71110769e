"""Machine checks of the concentric same-aspect-ratio equalities, the
inner-vs-outer discrimination of MPDIoU, and the loss bounds.

The construction: a ground-truth box plus two concentric predictions
with the same aspect ratio, one scaled by k > 1 (outer) and one by 1/k
(inner).  On such pairs GIoU, DIoU, CIoU and EIoU cannot tell inner
from outer, while MPDIoU strictly prefers the inner box (its corner
penalty is smaller).  Closed forms checked against the metric code:

    IoU    = 1/k^2 on both pairs
    EIoU   = (4k - 2k^2 - 1)/k^2 on both pairs
    MPDIoU_outer = 1/k^2 - (k-1)^2   (wg^2+hg^2) / (2 (w^2+h^2))
    MPDIoU_inner = 1/k^2 - (1-1/k)^2 (wg^2+hg^2) / (2 (w^2+h^2))
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadScale, OutOfImage, VerificationFailure
from .geometry import BBox, CenterForm, ImageDims, from_center_form
from .metrics import ciou, diou, eiou, giou, iou, mpdiou


@dataclass(frozen=True)
class TheoremInstance:
    gt: BBox
    prd_outer: BBox
    prd_inner: BBox
    k: float
    img: ImageDims


@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class Report:
    suite: str
    passed: bool
    checks: list[Check] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def build_instance(
    gt_center: tuple[float, float],
    gt_size: tuple[float, float],
    k: float,
    img: ImageDims,
) -> TheoremInstance:
    """Concentric gt/outer/inner triple; the outer box must fit the image."""
    if not k > 1:
        raise BadScale(f"k must be > 1, got {k}")
    xc, yc = gt_center
    bw, bh = gt_size
    gt = from_center_form(CenterForm(xc, yc, bw, bh))
    outer = from_center_form(CenterForm(xc, yc, k * bw, k * bh))
    inner = from_center_form(CenterForm(xc, yc, bw / k, bh / k))
    if outer.x1 < 0 or outer.y1 < 0 or outer.x2 > img.w or outer.y2 > img.h:
        raise OutOfImage(
            f"outer box {outer.as_tuple()} exceeds image {img.w}x{img.h}"
        )
    return TheoremInstance(gt, outer, inner, float(k), img)


def _record(report: Report, name: str, residual: float, tol: float, detail: str = ""):
    ok = abs(residual) <= tol
    report.checks.append(Check(name, ok, residual, detail))
    if not ok:
        report.passed = False


def verify_equalities(inst: TheoremInstance, tol: float = 1e-9) -> Report:
    """Check that GIoU/DIoU/CIoU/EIoU agree on the inner and outer pairs and
    collapse to the predicted closed forms.

    Raises VerificationFailure (carrying the report) on any violation.
    """
    report = Report(suite="theorem-equalities", passed=True)
    gt, k = inst.gt, inst.k
    pairs = {
        "giou": (giou(gt, inst.prd_outer).value, giou(gt, inst.prd_inner).value),
        "diou": (diou(gt, inst.prd_outer).value, diou(gt, inst.prd_inner).value),
        "ciou": (ciou(gt, inst.prd_outer).value, ciou(gt, inst.prd_inner).value),
        "eiou": (eiou(gt, inst.prd_outer).value, eiou(gt, inst.prd_inner).value),
    }
    for name, (outer, inner) in pairs.items():
        _record(report, f"{name}_outer_eq_inner", outer - inner, tol,
                f"outer={outer!r} inner={inner!r}")

    iou_expected = 1.0 / (k * k)
    iou_outer = iou(gt, inst.prd_outer).value
    iou_inner = iou(gt, inst.prd_inner).value
    _record(report, "iou_outer_closed_form", iou_outer - iou_expected, tol)
    _record(report, "iou_inner_closed_form", iou_inner - iou_expected, tol)

    # On concentric same-aspect pairs GIoU and DIoU (and CIoU, V = 0)
    # degrade to plain IoU.
    for name in ("giou", "diou", "ciou"):
        _record(report, f"{name}_outer_eq_iou", pairs[name][0] - iou_outer, tol)
        _record(report, f"{name}_inner_eq_iou", pairs[name][1] - iou_inner, tol)

    eiou_expected = (4.0 * k - 2.0 * k * k - 1.0) / (k * k)
    _record(report, "eiou_outer_closed_form", pairs["eiou"][0] - eiou_expected, tol)
    _record(report, "eiou_inner_closed_form", pairs["eiou"][1] - eiou_expected, tol)

    if not report.passed:
        raise VerificationFailure("theorem equalities violated", report)
    return report


def verify_discrimination(inst: TheoremInstance, tol: float = 1e-12) -> Report:
    """Check that MPDIoU strictly prefers the inner prediction and that both
    values match their closed forms."""
    report = Report(suite="theorem-discrimination", passed=True)
    gt, k, img = inst.gt, inst.k, inst.img
    size_sq = gt.width**2 + gt.height**2
    norm = img.diag_sq

    outer_val = mpdiou(gt, inst.prd_outer, img).value
    inner_val = mpdiou(gt, inst.prd_inner, img).value
    outer_closed = 1.0 / (k * k) - (k - 1.0) ** 2 * size_sq / (2.0 * norm)
    inner_closed = 1.0 / (k * k) - (1.0 - 1.0 / k) ** 2 * size_sq / (2.0 * norm)

    _record(report, "mpdiou_outer_closed_form", outer_val - outer_closed, tol)
    _record(report, "mpdiou_inner_closed_form", inner_val - inner_closed, tol)

    strict = inner_val > outer_val
    report.checks.append(
        Check(
            "inner_strictly_preferred",
            strict,
            inner_val - outer_val,
            f"inner={inner_val!r} outer={outer_val!r}",
        )
    )
    if not strict:
        report.passed = False

    if not report.passed:
        raise VerificationFailure("discrimination check violated", report)
    return report


def _random_box(rng: np.random.Generator, img: ImageDims, min_size: float) -> BBox:
    x1 = rng.uniform(0.0, img.w - min_size)
    y1 = rng.uniform(0.0, img.h - min_size)
    x2 = rng.uniform(x1 + min_size, img.w)
    y2 = rng.uniform(y1 + min_size, img.h)
    return BBox(x1, y1, x2, y2)


def verify_bounds(samples: int, img: ImageDims, seed: int = 0) -> Report:
    """Sample in-image pairs and check the loss bound 0 <= L < 3, the
    per-pair corner-penalty bound, and MPDIoU <= IoU."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    violations: list[Check] = []
    for _ in range(samples):
        gt = _random_box(rng, img, min_size=1e-6)
        prd = _random_box(rng, img, min_size=0.0)
        result = mpdiou(gt, prd, img)
        l_val = 1.0 - result.value
        penalty = (result.terms["d1_sq"] + result.terms["d2_sq"]) / result.terms[
            "img_diag_sq"
        ]
        iou_val = result.terms["iou"]
        if not (0.0 <= l_val < 3.0):
            violations.append(
                Check("loss_bounded", False, l_val, f"gt={gt} prd={prd}")
            )
        if not (0.0 <= penalty < 2.0):
            violations.append(
                Check("penalty_bounded", False, penalty, f"gt={gt} prd={prd}")
            )
        if result.value > iou_val:
            violations.append(
                Check(
                    "mpdiou_le_iou",
                    False,
                    result.value - iou_val,
                    f"gt={gt} prd={prd}",
                )
            )
        if violations:
            break
    report = Report(suite="bounds", passed=not violations, checks=violations)
    if violations:
        raise VerificationFailure("bound violated", report)
    report.checks.append(
        Check("all_samples_within_bounds", True, 0.0, f"samples={samples}")
    )
    return report
