"""Batched kernels over flat coordinate arrays.

Layout contract: a batch of n boxes is a flat float array of length 4n,
row-major [x1, y1, x2, y2] per box, rows canonical.  Each kernel applies
the scalar core to every row, so batched outputs are bit-identical to a
sequential loop over the core functions.  Bad rows never abort a batch:
they yield NaN in the outputs and set the corresponding error-mask bit,
while every other row is computed normally.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from mpdiou.errors import BoxError, NonSmoothPoint, ShapeMismatch
from mpdiou.geometry import BBox, ImageDims
from mpdiou.losses import LossSpec, gradient, loss
from mpdiou.metrics import MetricKind, compute

_KindArg = Union[MetricKind, str]


def _as_kind(kind: _KindArg) -> MetricKind:
    return kind if isinstance(kind, MetricKind) else MetricKind(kind)


def _as_rows(name: str, coords) -> np.ndarray:
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeMismatch(f"{name} must be a flat 1-d array, got ndim={arr.ndim}")
    if arr.size % 4 != 0:
        raise ShapeMismatch(f"{name} length {arr.size} is not a multiple of 4")
    return arr.reshape(-1, 4)


def _validate(kind: MetricKind, gt_coords, prd_coords, img: Optional[ImageDims]):
    gt = _as_rows("gt_coords", gt_coords)
    prd = _as_rows("prd_coords", prd_coords)
    if gt.shape[0] != prd.shape[0]:
        raise ShapeMismatch(
            f"batch sizes differ: gt has {gt.shape[0]} rows, prd has {prd.shape[0]}"
        )
    if kind.needs_image and img is None:
        raise ValueError("mpdiou kernels require image dims")
    if not kind.needs_image and img is not None:
        raise ValueError(f"{kind.value} kernels take no image dims")
    return gt, prd


def batch_metric(
    kind: _KindArg,
    gt_coords,
    prd_coords,
    img: Optional[ImageDims] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Element-wise metric over paired rows.

    Returns (values, error_mask), both length n.  Rows the core rejects
    (degenerate ground truth, non-finite coordinates) come back as NaN
    with the mask bit set.
    """
    kind = _as_kind(kind)
    gt, prd = _validate(kind, gt_coords, prd_coords, img)
    n = gt.shape[0]
    values = np.full(n, np.nan, dtype=np.float64)
    mask = np.zeros(n, dtype=bool)
    for i in range(n):
        try:
            values[i] = compute(kind, BBox(*gt[i]), BBox(*prd[i]), img).value
        except BoxError:
            mask[i] = True
    return values, mask


def batch_loss_grad(
    kind: _KindArg,
    gt_coords,
    prd_coords,
    img: Optional[ImageDims] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Element-wise loss and gradient over paired rows.

    Returns (losses, grads, error_mask): losses length n, grads flat
    length 4n in the same [d_x1, d_y1, d_x2, d_y2] row layout, mask
    length n.  A row at a non-smooth point keeps its loss value but gets
    NaN gradients and a mask bit; rows the core rejects outright get NaN
    in both outputs.
    """
    kind = _as_kind(kind)
    gt, prd = _validate(kind, gt_coords, prd_coords, img)
    n = gt.shape[0]
    spec = LossSpec(kind, img)
    losses = np.full(n, np.nan, dtype=np.float64)
    grads = np.full((n, 4), np.nan, dtype=np.float64)
    mask = np.zeros(n, dtype=bool)
    for i in range(n):
        gt_box, prd_box = BBox(*gt[i]), BBox(*prd[i])
        try:
            losses[i] = loss(spec, gt_box, prd_box)
            grads[i] = gradient(spec, gt_box, prd_box).as_tuple()
        except NonSmoothPoint:
            mask[i] = True
        except BoxError:
            losses[i] = np.nan
            mask[i] = True
    return losses, grads.reshape(-1), mask
