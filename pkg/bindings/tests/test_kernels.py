import numpy as np
import pytest

from mpdiou.errors import ShapeMismatch
from mpdiou.geometry import BBox, ImageDims
from mpdiou.losses import LossSpec, gradient, loss
from mpdiou.metrics import MetricKind, compute

from mpdiou_bindings import batch_loss_grad, batch_metric

IMG = ImageDims(640, 480)
IMG20 = ImageDims(20, 20)


def img_for(kind: MetricKind):
    return IMG if kind.needs_image else None


def random_rows(rng: np.random.Generator, n: int, img: ImageDims = IMG):
    """Flat gt/prd coordinate arrays with canonical, well-separated rows."""
    gt = np.empty((n, 4))
    prd = np.empty((n, 4))
    for arr, min_size in ((gt, 1.0), (prd, 1.0)):
        x1 = rng.uniform(0, img.w - 60, size=n)
        y1 = rng.uniform(0, img.h - 60, size=n)
        arr[:, 0] = x1
        arr[:, 1] = y1
        arr[:, 2] = x1 + rng.uniform(min_size, 60, size=n)
        arr[:, 3] = y1 + rng.uniform(min_size, 60, size=n)
    return gt.reshape(-1), prd.reshape(-1)


class TestShapeValidation:
    def test_length_not_multiple_of_four(self):
        with pytest.raises(ShapeMismatch):
            batch_metric(MetricKind.IOU, np.zeros(5), np.zeros(5))

    def test_batch_size_mismatch(self):
        with pytest.raises(ShapeMismatch):
            batch_metric(MetricKind.IOU, np.zeros(8), np.zeros(4))

    def test_non_flat_rejected(self):
        with pytest.raises(ShapeMismatch):
            batch_loss_grad(MetricKind.IOU, np.zeros((2, 4)), np.zeros((2, 4)))

    def test_img_required_iff_mpdiou(self):
        with pytest.raises(ValueError):
            batch_metric(MetricKind.MPDIOU, np.zeros(0), np.zeros(0))
        with pytest.raises(ValueError):
            batch_metric(MetricKind.IOU, np.zeros(0), np.zeros(0), img=IMG)


class TestEdgeBatches:
    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_empty_batch(self, kind):
        values, mask = batch_metric(kind, np.zeros(0), np.zeros(0), img_for(kind))
        assert values.shape == (0,) and mask.shape == (0,)
        losses, grads, mask = batch_loss_grad(
            kind, np.zeros(0), np.zeros(0), img_for(kind)
        )
        assert losses.shape == (0,) and grads.shape == (0,) and mask.shape == (0,)

    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_identical_single_row(self, kind):
        row = np.array([10.0, 10.0, 40.0, 50.0])
        values, mask = batch_metric(kind, row, row, img_for(kind))
        assert values.tolist() == [1.0]
        assert not mask[0]

    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_identical_rows_zero_loss(self, kind):
        rows = np.tile([10.0, 10.0, 40.0, 50.0], 3)
        losses, grads, mask = batch_loss_grad(kind, rows, rows, img_for(kind))
        assert losses.tolist() == [0.0, 0.0, 0.0]
        # identical boxes sit on a min/max tie, so gradients are masked
        assert mask.all()
        assert np.isnan(grads).all()

    def test_string_kind_accepted(self):
        row = np.array([0.0, 0.0, 10.0, 10.0])
        values, _ = batch_metric("iou", row, row)
        assert values.tolist() == [1.0]


class TestKnownGradientRow:
    def test_matches_scalar_partial_overlap_example(self):
        gt = np.array([0.0, 0.0, 10.0, 10.0])
        prd = np.array([5.0, 5.0, 15.0, 15.0])
        losses, grads, mask = batch_loss_grad(MetricKind.MPDIOU, gt, prd, IMG20)
        assert not mask[0]
        assert losses[0] == 1 - (1 / 7 - 100 / 800)
        expected = 750 / 30625 + 2 * 5 / 800
        assert grads[0] == expected
        assert grads[1] == expected


class TestCoreEquivalence:
    N = 10_000

    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_metric_bit_identical_to_scalar_loop(self, kind):
        rng = np.random.default_rng(sum(kind.value.encode()) + 1)
        gt, prd = random_rows(rng, self.N)
        img = img_for(kind)
        values, mask = batch_metric(kind, gt, prd, img)
        assert not mask.any()
        g, p = gt.reshape(-1, 4), prd.reshape(-1, 4)
        for i in range(self.N):
            expected = compute(kind, BBox(*g[i]), BBox(*p[i]), img).value
            assert values[i] == expected

    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_loss_and_grad_bit_identical_to_scalar_loop(self, kind):
        rng = np.random.default_rng(sum(kind.value.encode()) + 2)
        gt, prd = random_rows(rng, self.N)
        img = img_for(kind)
        losses, grads, mask = batch_loss_grad(kind, gt, prd, img)
        spec = LossSpec(kind, img)
        g, p = gt.reshape(-1, 4), prd.reshape(-1, 4)
        grads = grads.reshape(-1, 4)
        for i in range(self.N):
            gt_box, prd_box = BBox(*g[i]), BBox(*p[i])
            assert losses[i] == loss(spec, gt_box, prd_box)
            if mask[i]:
                assert np.isnan(grads[i]).all()
            else:
                assert tuple(grads[i]) == gradient(spec, gt_box, prd_box).as_tuple()


class TestErrorMaskIsolation:
    def test_degenerate_gt_row_isolated(self):
        good = [0.0, 0.0, 10.0, 10.0]
        bad = [5.0, 5.0, 5.0, 5.0]  # zero-area ground truth
        gt = np.array(good + bad + good)
        prd = np.array([1.0, 1.0, 11.0, 11.0] * 3)
        values, mask = batch_metric(MetricKind.GIOU, gt, prd)
        assert mask.tolist() == [False, True, False]
        assert np.isnan(values[1])
        assert values[0] == values[2]
        assert np.isfinite(values[0])

    def test_degenerate_gt_row_isolated_in_loss_grad(self):
        gt = np.array([0.0, 0.0, 10.0, 10.0, 5.0, 5.0, 5.0, 5.0])
        prd = np.array([1.0, 1.0, 11.0, 11.0] * 2)
        losses, grads, mask = batch_loss_grad(MetricKind.IOU, gt, prd)
        assert mask.tolist() == [False, True]
        assert np.isfinite(losses[0]) and np.isnan(losses[1])
        assert np.isfinite(grads[:4]).all() and np.isnan(grads[4:]).all()

    def test_non_smooth_row_keeps_loss_and_neighbours(self):
        tied = [0.0, 2.0, 12.0, 12.0]  # x1 tied with the gt row below
        good = [3.0, 3.0, 12.0, 12.0]
        gt = np.array([0.0, 0.0, 10.0, 10.0] * 2)
        prd = np.array(tied + good)
        losses, grads, mask = batch_loss_grad(MetricKind.GIOU, gt, prd)
        assert mask.tolist() == [True, False]
        assert np.isfinite(losses).all()  # the loss itself is well defined
        assert np.isnan(grads[:4]).all()
        assert np.isfinite(grads[4:]).all()
