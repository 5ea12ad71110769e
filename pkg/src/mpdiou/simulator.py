"""Synthetic box regression: gradient descent on predicted corners.

Each scenario starts a predicted box somewhere in the image and walks it
toward the ground truth by plain gradient descent on the chosen loss.
Step sizes are given in normalized units and multiplied by the squared
image diagonal internally, so the corner-penalty scale of MPDIoU and the
area-ratio scale of the IoU family see comparable effective steps.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import IoFailure, NonSmoothPoint
from .geometry import BBox, CenterForm, ImageDims, canonicalize, from_center_form, intersection_area
from .losses import LossGradient, LossSpec, gradient, loss
from .metrics import MetricKind, iou

FAMILIES = ("overlapping", "nonoverlapping", "contained-same-aspect", "random")

#: Normalized step producing a 10 px^2-equivalent learning rate on a
#: 100x100 image (lr = step_size * (w^2 + h^2)).
DEFAULT_STEP_SIZE = 5e-4


@dataclass(frozen=True)
class ScenarioSuite:
    family: str
    cases: tuple[tuple[BBox, BBox], ...]
    img: ImageDims


@dataclass(frozen=True)
class RunConfig:
    kind: MetricKind
    step_size: float = DEFAULT_STEP_SIZE
    max_iters: int = 5000
    stop_loss: float = 0.01
    stop_iou: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")


@dataclass
class ConvergenceRecord:
    case_id: int
    kind: MetricKind
    losses: list[float] = field(default_factory=list)
    ious: list[float] = field(default_factory=list)
    boxes: list[BBox] = field(default_factory=list)
    iters_to_threshold: int | None = None
    diverged: bool = False

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    @property
    def final_iou(self) -> float:
        return self.ious[-1]


def _random_gt(rng: np.random.Generator, img: ImageDims) -> BBox:
    bw = rng.uniform(0.15, 0.4) * img.w
    bh = rng.uniform(0.15, 0.4) * img.h
    x1 = rng.uniform(0.0, img.w - bw)
    y1 = rng.uniform(0.0, img.h - bh)
    return BBox(x1, y1, x1 + bw, y1 + bh)


def generate_suite(
    family: str, n_cases: int, img: ImageDims, seed: int
) -> ScenarioSuite:
    """Deterministic scenario generation; each family guarantees its own
    geometric constraint (e.g. zero overlap for 'nonoverlapping')."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if n_cases <= 0:
        raise ValueError("n_cases must be positive")
    rng = np.random.default_rng(seed)
    cases: list[tuple[BBox, BBox]] = []
    while len(cases) < n_cases:
        gt = _random_gt(rng, img)
        if family == "overlapping":
            dx = rng.uniform(-0.5, 0.5) * gt.width
            dy = rng.uniform(-0.5, 0.5) * gt.height
            scale = rng.uniform(0.7, 1.4)
            c = CenterForm(
                (gt.x1 + gt.x2) / 2 + dx,
                (gt.y1 + gt.y2) / 2 + dy,
                gt.width * scale,
                gt.height * scale,
            )
            prd = from_center_form(c)
            if intersection_area(gt, prd) <= 0:
                continue
        elif family == "nonoverlapping":
            prd = _random_gt(rng, img)
            if intersection_area(gt, prd) > 0:
                continue
        elif family == "contained-same-aspect":
            k = rng.uniform(1.0, 4.0)
            if k <= 1.0:
                continue
            # Concentric, same aspect ratio: one prediction scaled by k
            # (containing gt) or by 1/k (contained in gt).
            factor = k if rng.random() < 0.5 else 1.0 / k
            prd = from_center_form(
                CenterForm(
                    (gt.x1 + gt.x2) / 2,
                    (gt.y1 + gt.y2) / 2,
                    gt.width * factor,
                    gt.height * factor,
                )
            )
        else:  # random
            prd = _random_gt(rng, img)
        if prd.x1 < 0 or prd.y1 < 0 or prd.x2 > img.w or prd.y2 > img.h:
            continue
        cases.append((gt, prd))
    return ScenarioSuite(family, tuple(cases), img)


def _step_case(
    spec: LossSpec, gt: BBox, prd: BBox, lr: float
) -> tuple[BBox, LossGradient]:
    """One descent step, perturbing tied coordinates until the gradient is
    defined."""
    for _ in range(8):
        try:
            grad = gradient(spec, gt, prd)
            break
        except NonSmoothPoint as exc:
            bump = dict.fromkeys(("x1", "y1", "x2", "y2"), 0.0)
            for name in exc.tied_coords:
                bump[name] = 1e-7
            prd = BBox(
                prd.x1 + bump["x1"],
                prd.y1 + bump["y1"],
                prd.x2 + bump["x2"],
                prd.y2 + bump["y2"],
            )
    else:
        raise NonSmoothPoint("could not escape tied configuration")
    nxt = canonicalize(
        (
            prd.x1 - lr * grad.d_x1,
            prd.y1 - lr * grad.d_y1,
            prd.x2 - lr * grad.d_x2,
            prd.y2 - lr * grad.d_y2,
        )
    )
    return nxt, grad


def run_regression(suite: ScenarioSuite, cfg: RunConfig) -> list[ConvergenceRecord]:
    """Gradient descent per case; trajectories are recorded in full.

    A case whose loss goes non-finite is marked diverged and the run
    continues with the remaining cases.
    """
    spec = (
        LossSpec(cfg.kind, suite.img)
        if cfg.kind.needs_image
        else LossSpec(cfg.kind)
    )
    lr = cfg.step_size * suite.img.diag_sq
    records = []
    for case_id, (gt, prd) in enumerate(suite.cases):
        rec = ConvergenceRecord(case_id=case_id, kind=cfg.kind)
        cur = prd
        for it in range(cfg.max_iters + 1):
            l_val = loss(spec, gt, cur)
            i_val = iou(gt, cur).value
            rec.losses.append(l_val)
            rec.ious.append(i_val)
            rec.boxes.append(cur)
            if not np.isfinite(l_val):
                rec.diverged = True
                break
            if i_val >= cfg.stop_iou and rec.iters_to_threshold is None:
                rec.iters_to_threshold = it
            if l_val <= cfg.stop_loss or i_val >= cfg.stop_iou:
                break
            if it == cfg.max_iters:
                break
            nxt, grad = _step_case(spec, gt, cur, lr)
            if grad.as_tuple() == (0.0, 0.0, 0.0, 0.0):
                break  # flat region (e.g. plain IoU with no overlap)
            cur = nxt
        records.append(rec)
    return records


CSV_HEADER = ("case_id", "kind", "iter", "loss", "iou", "x1", "y1", "x2", "y2")


def records_to_csv(records: Iterable[ConvergenceRecord]) -> str:
    """Render trajectories as CSV text with a fixed header and ordering."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in sorted(records, key=lambda r: r.case_id):
        for it, (l_val, i_val, box) in enumerate(
            zip(rec.losses, rec.ious, rec.boxes)
        ):
            writer.writerow(
                (
                    rec.case_id,
                    rec.kind.value,
                    it,
                    repr(l_val),
                    repr(i_val),
                    repr(box.x1),
                    repr(box.y1),
                    repr(box.x2),
                    repr(box.y2),
                )
            )
    return buf.getvalue()


def export_records(records: Iterable[ConvergenceRecord], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(records_to_csv(records))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
