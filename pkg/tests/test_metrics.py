import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mpdiou.errors import (
    DegenerateAspect,
    DegenerateGroundTruth,
)
from mpdiou.geometry import BBox, CenterForm, ImageDims, from_center_form
from mpdiou.metrics import MetricKind, ciou, compute, diou, eiou, giou, iou, mpdiou

IMG = ImageDims(100, 100)

# Concentric squares on a 100x100 image with (side^2 + side^2) / (w^2 + h^2)
# = 0.08, scaled by k = 2 outward and inward.  The reference instance for
# the published loss values 0.75 / 1.25 / 0.79 / 0.76.
SIDE = math.sqrt(800.0)
GT_K2 = from_center_form(CenterForm(50, 50, SIDE, SIDE))
OUTER_K2 = from_center_form(CenterForm(50, 50, 2 * SIDE, 2 * SIDE))
INNER_K2 = from_center_form(CenterForm(50, 50, SIDE / 2, SIDE / 2))


def in_image_boxes(min_size=0.0):
    c = st.floats(0, 100, allow_nan=False)

    def build(x1, y1, x2, y2):
        if x2 < x1:
            x1, x2 = x2, x1
        if y2 < y1:
            y1, y2 = y2, y1
        return BBox(x1, y1, x2, y2)

    return (
        st.builds(build, c, c, c, c)
        .filter(lambda b: b.width >= min_size and b.height >= min_size)
    )


class TestIoU:
    def test_identity(self):
        assert iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)).value == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)).value == 0.0

    def test_partial(self):
        assert iou(BBox(0, 0, 10, 10), BBox(5, 5, 15, 15)).value == pytest.approx(
            25 / 175, abs=1e-15
        )

    def test_degenerate_gt_rejected(self):
        with pytest.raises(DegenerateGroundTruth):
            iou(BBox(0, 0, 0, 10), BBox(0, 0, 10, 10))

    def test_degenerate_prediction_allowed(self):
        assert iou(BBox(0, 0, 10, 10), BBox(3, 3, 3, 3)).value == 0.0


class TestGIoU:
    def test_identity(self):
        assert giou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)).value == 1.0

    def test_concentric_k2(self):
        assert giou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value == pytest.approx(
            0.25, abs=1e-12
        )

    def test_adjacent_boxes_enclosure_equals_union(self):
        assert giou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)).value == 0.0


class TestDIoU:
    def test_identity(self):
        assert diou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)).value == 1.0

    def test_concentric_k2(self):
        assert diou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value == pytest.approx(
            0.25, abs=1e-12
        )

    def test_adjacent_boxes(self):
        # centers (5,5) and (15,5); enclosure 20x10 so diag^2 = 500
        assert diou(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)).value == pytest.approx(
            -0.2, abs=1e-12
        )


class TestCIoU:
    def test_concentric_k2(self):
        assert ciou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value == pytest.approx(
            0.25, abs=1e-12
        )

    def test_equal_aspect_reduces_to_diou(self):
        gt, prd = BBox(10, 10, 30, 40), BBox(15, 20, 35, 50)
        assert ciou(gt, prd).value == pytest.approx(diou(gt, prd).value, abs=1e-15)

    def test_aspect_penalty_value(self):
        gt, prd = BBox(0, 0, 10, 10), BBox(0, 0, 20, 10)
        res = ciou(gt, prd)
        assert res.terms["aspect_v"] == pytest.approx(0.041957, abs=1e-6)
        assert res.terms["aspect_alpha"] == pytest.approx(0.077417, abs=1e-6)
        assert res.value == pytest.approx(0.446752, abs=1e-6)

    def test_zero_extent_rejected(self):
        with pytest.raises(DegenerateAspect):
            ciou(BBox(0, 0, 10, 10), BBox(0, 0, 0, 10))


class TestEIoU:
    def test_identity(self):
        assert eiou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)).value == 1.0

    def test_concentric_k2(self):
        assert eiou(BBox(25, 25, 75, 75), BBox(0, 0, 100, 100)).value == pytest.approx(
            -0.25, abs=1e-12
        )

    def test_width_penalty(self):
        # DIoU 0.45, width diff 10 over enclosing width 20, no height diff
        assert eiou(BBox(0, 0, 10, 10), BBox(0, 0, 20, 10)).value == pytest.approx(
            0.2, abs=1e-12
        )


class TestMPDIoU:
    def test_identity(self):
        assert mpdiou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10), ImageDims(20, 20)).value == 1.0

    def test_partial(self):
        val = mpdiou(BBox(0, 0, 10, 10), BBox(5, 5, 15, 15), ImageDims(20, 20)).value
        assert val == pytest.approx(1 / 7 - 100 / 800, abs=1e-12)

    def test_published_loss_values(self):
        assert 1 - mpdiou(GT_K2, OUTER_K2, IMG).value == pytest.approx(0.79, abs=5e-3)
        assert 1 - mpdiou(GT_K2, INNER_K2, IMG).value == pytest.approx(0.76, abs=5e-3)

    def test_disjoint_loss_reduces_to_penalty(self):
        gt, prd = BBox(0, 0, 10, 10), BBox(50, 50, 70, 70)
        res = mpdiou(gt, prd, IMG)
        penalty = (res.terms["d1_sq"] + res.terms["d2_sq"]) / IMG.diag_sq
        assert res.terms["iou"] == 0.0
        assert 1 - res.value == pytest.approx(1 + penalty, abs=1e-15)
        assert 0 <= penalty < 2


class TestDispatch:
    def test_requires_img_for_mpdiou(self):
        with pytest.raises(ValueError):
            compute(MetricKind.MPDIOU, BBox(0, 0, 1, 1), BBox(0, 0, 1, 1))

    @pytest.mark.parametrize("kind", list(MetricKind))
    def test_identity_value_one(self, kind):
        b = BBox(10, 10, 40, 50)
        img = IMG if kind.needs_image else None
        assert compute(kind, b, b, img).value == 1.0


class TestTermConsistency:
    @given(in_image_boxes(min_size=1.0), in_image_boxes(min_size=1.0))
    @settings(max_examples=200)
    def test_value_recomputable_from_terms(self, gt, prd):
        res = mpdiou(gt, prd, IMG)
        t = res.terms
        rebuilt = t["iou"] - t["d1_sq"] / t["img_diag_sq"] - t["d2_sq"] / t["img_diag_sq"]
        assert res.value == pytest.approx(rebuilt, rel=1e-12, abs=1e-12)
        res_e = eiou(gt, prd)
        t = res_e.terms
        rebuilt = (
            t["iou"]
            - t["center_dist_sq"] / t["enclosing_diag_sq"]
            - t["width_diff_sq"] / t["enclosing_w"] ** 2
            - t["height_diff_sq"] / t["enclosing_h"] ** 2
        )
        assert res_e.value == pytest.approx(rebuilt, rel=1e-12, abs=1e-12)


class TestSharedProperties:
    @given(in_image_boxes(min_size=1.0), in_image_boxes(min_size=1.0))
    @settings(max_examples=150)
    def test_symmetry_under_argument_swap(self, a, b):
        for kind in MetricKind:
            img = IMG if kind.needs_image else None
            v1 = compute(kind, a, b, img).value
            v2 = compute(kind, b, a, img).value
            assert v1 == pytest.approx(v2, rel=1e-9, abs=1e-12)

    @given(in_image_boxes(min_size=1.0), in_image_boxes(min_size=1.0))
    @settings(max_examples=150)
    def test_pointwise_ordering(self, gt, prd):
        iou_v = iou(gt, prd).value
        diou_v = diou(gt, prd).value
        assert giou(gt, prd).value <= iou_v + 1e-12
        assert diou_v <= iou_v + 1e-12
        assert ciou(gt, prd).value <= diou_v + 1e-12
        assert eiou(gt, prd).value <= diou_v + 1e-12
        assert mpdiou(gt, prd, IMG).value <= iou_v + 1e-12

    @given(in_image_boxes(min_size=1.0), in_image_boxes(min_size=1.0))
    @settings(max_examples=150)
    def test_ranges_on_in_image_boxes(self, gt, prd):
        assert 0.0 <= iou(gt, prd).value <= 1.0
        assert -1.0 < giou(gt, prd).value <= 1.0
        assert -1.0 < diou(gt, prd).value <= 1.0
        assert -2.0 < mpdiou(gt, prd, IMG).value <= 1.0

    @given(
        in_image_boxes(min_size=1.0),
        in_image_boxes(min_size=1.0),
        st.floats(-1000, 1000, allow_nan=False),
        st.floats(-1000, 1000, allow_nan=False),
    )
    @settings(max_examples=100)
    def test_joint_translation_invariance(self, gt, prd, dx, dy):
        def shift(b):
            return BBox(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy)

        for kind in MetricKind:
            img = IMG if kind.needs_image else None
            before = compute(kind, gt, prd, img).value
            after = compute(kind, shift(gt), shift(prd), img).value
            assert after == pytest.approx(before, rel=1e-9, abs=1e-9)

    @given(
        in_image_boxes(min_size=1.0),
        in_image_boxes(min_size=1.0),
        st.floats(0.01, 100.0, allow_nan=False),
    )
    @settings(max_examples=100)
    def test_scale_invariance(self, gt, prd, s):
        def scale(b):
            return BBox(b.x1 * s, b.y1 * s, b.x2 * s, b.y2 * s)

        # Boxes-only scaling leaves the image-free metrics unchanged.
        for kind in (MetricKind.IOU, MetricKind.GIOU, MetricKind.DIOU,
                     MetricKind.CIOU, MetricKind.EIOU):
            before = compute(kind, gt, prd).value
            after = compute(kind, scale(gt), scale(prd)).value
            assert after == pytest.approx(before, rel=1e-9, abs=1e-9)
        # MPDIoU needs the image scaled along with the boxes.
        before = mpdiou(gt, prd, IMG).value
        after = mpdiou(scale(gt), scale(prd), ImageDims(IMG.w * s, IMG.h * s)).value
        assert after == pytest.approx(before, rel=1e-9, abs=1e-9)

    @given(
        st.floats(20, 80),
        st.floats(20, 80),
        st.floats(2, 20),
        st.floats(2, 20),
        st.floats(1.01, 2.0),
    )
    @settings(max_examples=100)
    def test_concentric_same_aspect_equalities(self, xc, yc, bw, bh, k):
        gt = from_center_form(CenterForm(xc, yc, bw, bh))
        prd = from_center_form(CenterForm(xc, yc, k * bw, k * bh))
        assume(prd.x1 >= 0 and prd.y1 >= 0 and prd.x2 <= 100 and prd.y2 <= 100)
        iou_v = iou(gt, prd).value
        assert giou(gt, prd).value == pytest.approx(iou_v, abs=1e-12)
        assert diou(gt, prd).value == pytest.approx(iou_v, abs=1e-12)
        assert ciou(gt, prd).value == pytest.approx(iou_v, abs=1e-12)
