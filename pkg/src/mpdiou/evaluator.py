"""Detection evaluation: greedy matching, 101-point AP, and an
AP/AR summary over thresholds 0.50:0.05:0.95 with the match metric
switchable between IoU and MPDIoU.

Dataset JSON schema::

    {"images": [{"image_id": str, "width": num, "height": num,
                 "ground_truth": [{"bbox": [x1,y1,x2,y2], "category": str}]}],
     "detections": [{"image_id": str, "bbox": [x1,y1,x2,y2],
                     "category": str, "score": num}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import DegenerateGroundTruth, SchemaError, UnknownCategory
from .geometry import BBox, ImageDims, area, canonicalize
from .metrics import MetricKind, compute

THRESHOLDS = tuple(t / 100.0 for t in range(50, 100, 5))
AR_DETECTION_CAP = 100


@dataclass(frozen=True)
class GroundTruth:
    box: BBox
    category: str


@dataclass(frozen=True)
class Detection:
    image_id: str
    box: BBox
    category: str
    score: float
    order: int  # input position, the tie-breaker for equal scores


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    dims: ImageDims
    gt: tuple[GroundTruth, ...]


@dataclass(frozen=True)
class DetectionDataset:
    images: tuple[ImageRecord, ...]
    detections: tuple[Detection, ...]

    @property
    def categories(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for img in self.images:
            for g in img.gt:
                seen.setdefault(g.category, None)
        for det in self.detections:
            seen.setdefault(det.category, None)
        return tuple(sorted(seen))


@dataclass(frozen=True)
class MatchedDetection:
    score: float
    order: int
    is_tp: bool


@dataclass(frozen=True)
class MatchResult:
    detections: tuple[MatchedDetection, ...]
    n_gt: int


@dataclass
class EvalSummary:
    match_kind: MetricKind
    per_category: dict[str, dict[float, float | None]] = field(default_factory=dict)
    ap_per_threshold: dict[float, float | None] = field(default_factory=dict)
    mean_ap: float | None = None
    ap75: float | None = None
    ar100: float | None = None

    def to_dict(self) -> dict:
        return {
            "match_kind": self.match_kind.value,
            "per_category": {
                cat: {f"{t:.2f}": ap for t, ap in by_t.items()}
                for cat, by_t in self.per_category.items()
            },
            "ap_per_threshold": {
                f"{t:.2f}": ap for t, ap in self.ap_per_threshold.items()
            },
            "mAP": self.mean_ap,
            "AP75": self.ap75,
            "AR100": self.ar100,
        }


def _require(cond: bool, message: str, pointer: str):
    if not cond:
        raise SchemaError(message, pointer)


def _parse_bbox(raw, pointer: str) -> BBox:
    _require(
        isinstance(raw, list) and len(raw) == 4, "bbox must be a 4-element list", pointer
    )
    for i, c in enumerate(raw):
        _require(
            isinstance(c, (int, float)) and math.isfinite(c),
            "bbox coordinate must be a finite number",
            f"{pointer}/{i}",
        )
    return canonicalize(raw)


def load_dataset(path) -> DetectionDataset:
    """Parse and validate a dataset file; errors carry a JSON pointer."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", "") from exc
    _require(isinstance(raw, dict), "top level must be an object", "")
    _require(isinstance(raw.get("images"), list), "missing 'images' list", "/images")
    _require(
        isinstance(raw.get("detections"), list),
        "missing 'detections' list",
        "/detections",
    )

    images = []
    known_ids = set()
    for i, entry in enumerate(raw["images"]):
        ptr = f"/images/{i}"
        _require(isinstance(entry, dict), "image entry must be an object", ptr)
        image_id = entry.get("image_id")
        _require(isinstance(image_id, str), "image_id must be a string", f"{ptr}/image_id")
        _require(image_id not in known_ids, "duplicate image_id", f"{ptr}/image_id")
        known_ids.add(image_id)
        for dim in ("width", "height"):
            _require(
                isinstance(entry.get(dim), (int, float)) and entry[dim] > 0,
                f"{dim} must be a positive number",
                f"{ptr}/{dim}",
            )
        gts = entry.get("ground_truth")
        _require(isinstance(gts, list), "missing 'ground_truth' list", f"{ptr}/ground_truth")
        parsed_gt = []
        for j, g in enumerate(gts):
            gptr = f"{ptr}/ground_truth/{j}"
            _require(isinstance(g, dict), "ground-truth entry must be an object", gptr)
            box = _parse_bbox(g.get("bbox"), f"{gptr}/bbox")
            if area(box) <= 0:
                raise DegenerateGroundTruth(
                    f"zero-area ground truth in image {image_id!r}"
                )
            _require(
                isinstance(g.get("category"), str),
                "category must be a string",
                f"{gptr}/category",
            )
            parsed_gt.append(GroundTruth(box, g["category"]))
        images.append(
            ImageRecord(image_id, ImageDims(entry["width"], entry["height"]), tuple(parsed_gt))
        )
    images.sort(key=lambda im: im.image_id)

    detections = []
    for i, entry in enumerate(raw["detections"]):
        ptr = f"/detections/{i}"
        _require(isinstance(entry, dict), "detection entry must be an object", ptr)
        image_id = entry.get("image_id")
        _require(isinstance(image_id, str), "image_id must be a string", f"{ptr}/image_id")
        _require(image_id in known_ids, "unknown image_id", f"{ptr}/image_id")
        box = _parse_bbox(entry.get("bbox"), f"{ptr}/bbox")
        _require(
            isinstance(entry.get("category"), str),
            "category must be a string",
            f"{ptr}/category",
        )
        score = entry.get("score")
        _require(
            isinstance(score, (int, float)) and math.isfinite(score),
            "score must be a finite number",
            f"{ptr}/score",
        )
        detections.append(Detection(image_id, box, entry["category"], float(score), i))
    return DetectionDataset(tuple(images), tuple(detections))


def _match_value(kind: MetricKind, gt: BBox, prd: BBox, dims: ImageDims) -> float:
    img = dims if kind.needs_image else None
    return compute(kind, gt, prd, img).value


def match_detections(
    ds: DetectionDataset,
    category: str,
    threshold: float,
    kind: MetricKind = MetricKind.IOU,
    detection_cap: int | None = None,
) -> MatchResult:
    """Greedy score-ordered matching of detections to ground truths.

    Each detection claims the unmatched gt with the highest metric value,
    provided it reaches the threshold; each gt matches at most once.
    ``detection_cap`` keeps only the top-N detections per image (by score,
    across categories), as used for AR@100.
    """
    if category not in ds.categories:
        raise UnknownCategory(f"category {category!r} not present in dataset")
    kept: list[Detection] = []
    if detection_cap is None:
        kept = [d for d in ds.detections if d.category == category]
    else:
        for img in ds.images:
            per_image = [d for d in ds.detections if d.image_id == img.image_id]
            per_image.sort(key=lambda d: (-d.score, d.order))
            kept.extend(
                d for d in per_image[:detection_cap] if d.category == category
            )

    matched: list[MatchedDetection] = []
    n_gt = 0
    for img in ds.images:
        gts = [g.box for g in img.gt if g.category == category]
        n_gt += len(gts)
        dets = sorted(
            (d for d in kept if d.image_id == img.image_id),
            key=lambda d: (-d.score, d.order),
        )
        used = [False] * len(gts)
        for det in dets:
            best_idx = -1
            best_val = -math.inf
            for gi, gbox in enumerate(gts):
                if used[gi]:
                    continue
                val = _match_value(kind, gbox, det.box, img.dims)
                if val >= threshold and val > best_val:
                    best_val = val
                    best_idx = gi
            if best_idx >= 0:
                used[best_idx] = True
                matched.append(MatchedDetection(det.score, det.order, True))
            else:
                matched.append(MatchedDetection(det.score, det.order, False))
    return MatchResult(tuple(matched), n_gt)


def average_precision(matches: MatchResult) -> float | None:
    """101-point interpolated AP over the score-ranked PR curve.

    Returns None (undefined) when there are neither ground truths nor
    detections; 0.0 when detections exist but no ground truth does.
    """
    n_gt = matches.n_gt
    dets = sorted(matches.detections, key=lambda m: (-m.score, m.order))
    if n_gt == 0:
        return None if not dets else 0.0
    if not dets:
        return 0.0
    precisions = []
    recalls = []
    tp = 0
    for rank, m in enumerate(dets, start=1):
        if m.is_tp:
            tp += 1
        precisions.append(tp / rank)
        recalls.append(tp / n_gt)
    # Make precision monotone non-increasing from the right, then sample
    # the curve at 101 evenly spaced recall points.
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    j = 0
    for step in range(101):
        r = step / 100.0
        while j < len(recalls) and recalls[j] < r:
            j += 1
        ap += precisions[j] if j < len(recalls) else 0.0
    return ap / 101.0


def recall_at_cap(
    ds: DetectionDataset, category: str, threshold: float, kind: MetricKind
) -> float | None:
    """Recall with at most AR_DETECTION_CAP detections per image."""
    result = match_detections(
        ds, category, threshold, kind, detection_cap=AR_DETECTION_CAP
    )
    if result.n_gt == 0:
        return None
    tp = sum(1 for m in result.detections if m.is_tp)
    return tp / result.n_gt


def summarize(ds: DetectionDataset, kind: MetricKind = MetricKind.IOU) -> EvalSummary:
    """AP per (category, threshold), their means, AP75, and AR@100."""
    summary = EvalSummary(match_kind=kind)
    categories = ds.categories
    recalls: list[float] = []
    for cat in categories:
        summary.per_category[cat] = {}
        for t in THRESHOLDS:
            ap = average_precision(match_detections(ds, cat, t, kind))
            summary.per_category[cat][t] = ap
            r = recall_at_cap(ds, cat, t, kind)
            if r is not None:
                recalls.append(r)
    for t in THRESHOLDS:
        aps = [
            summary.per_category[cat][t]
            for cat in categories
            if summary.per_category[cat][t] is not None
        ]
        summary.ap_per_threshold[t] = sum(aps) / len(aps) if aps else None
    defined = [v for v in summary.ap_per_threshold.values() if v is not None]
    summary.mean_ap = sum(defined) / len(defined) if defined else None
    summary.ap75 = summary.ap_per_threshold[0.75]
    summary.ar100 = sum(recalls) / len(recalls) if recalls else None
    return summary


def summary_to_csv(summary: EvalSummary) -> str:
    """Flat CSV rendering: one row per (category, threshold) plus totals."""
    lines = ["category,threshold,ap"]
    for cat, by_t in summary.per_category.items():
        for t, ap in by_t.items():
            lines.append(f"{cat},{t:.2f},{'' if ap is None else repr(ap)}")
    for t, ap in summary.ap_per_threshold.items():
        lines.append(f"__mean__,{t:.2f},{'' if ap is None else repr(ap)}")
    lines.append(f"__mAP__,,{'' if summary.mean_ap is None else repr(summary.mean_ap)}")
    lines.append(f"__AP75__,,{'' if summary.ap75 is None else repr(summary.ap75)}")
    lines.append(f"__AR100__,,{'' if summary.ar100 is None else repr(summary.ar100)}")
    return "\n".join(lines) + "\n"
