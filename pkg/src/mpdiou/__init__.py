"""Bounding-box regression toolkit: the IoU/GIoU/DIoU/CIoU/EIoU/MPDIoU
metric family, losses with analytic gradients, property verifiers, a
convergence simulator, and a COCO-style detection evaluator."""

from .geometry import (
    BBox,
    CenterForm,
    ImageDims,
    area,
    canonicalize,
    enclosing_box,
    from_center_form,
    intersection_area,
    to_center_form,
)
from .metrics import (
    MetricKind,
    MetricResult,
    ciou,
    compute,
    diou,
    eiou,
    giou,
    iou,
    mpdiou,
)
from .losses import LossGradient, LossSpec, fd_gradient, gradient, loss

__all__ = [
    "BBox",
    "CenterForm",
    "ImageDims",
    "LossGradient",
    "LossSpec",
    "MetricKind",
    "MetricResult",
    "area",
    "canonicalize",
    "ciou",
    "compute",
    "diou",
    "eiou",
    "enclosing_box",
    "fd_gradient",
    "from_center_form",
    "giou",
    "gradient",
    "intersection_area",
    "iou",
    "loss",
    "mpdiou",
    "to_center_form",
]

__version__ = "0.1.0"
