import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opdkit.core import (
    BBox,
    BinaryMask,
    CoordFrame,
    MetricConfig,
    MotionParams,
    MotionType,
    bbox_iou,
    mask_iou,
    rle_decode,
    rle_encode,
    tight_bbox,
)

from helpers import pixel_iou_oracle, rle_expand_oracle


def grid_from(rows):
    return np.array([[c == "#" for c in row] for row in rows])


class TestRle:
    def test_all_false_is_single_zero_run(self):
        mask = rle_encode(np.zeros((2, 2), dtype=bool))
        assert mask.rle == (4,)

    def test_all_true_has_leading_zero_run(self):
        mask = rle_encode(np.ones((2, 2), dtype=bool))
        assert mask.rle == (0, 4)

    def test_column_major_order(self):
        grid = grid_from(["#.", ".."])  # one pixel at row 0, col 0
        assert rle_encode(grid).rle == (0, 1, 3)
        grid = grid_from([".#", ".."])  # row 0, col 1 -> third position column-major
        assert rle_encode(grid).rle == (2, 1, 1)

    def test_roundtrip_against_naive_expansion(self):
        rng = np.random.default_rng(42)
        grid = rng.random((48, 64)) > 0.5
        mask = rle_encode(grid)
        assert (rle_decode(mask) == grid).all()
        assert (rle_expand_oracle(mask.rle, mask.width, mask.height) == grid).all()

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            rle_encode(np.zeros((0, 3), dtype=bool))

    def test_run_sum_validated(self):
        with pytest.raises(ValueError):
            BinaryMask(width=2, height=2, rle=(3,))
        with pytest.raises(ValueError):
            BinaryMask(width=2, height=2, rle=(1, 0, 3))

    @given(
        st.integers(min_value=1, max_value=12),
        st.integers(min_value=1, max_value=12),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_property(self, width, height, seed):
        grid = np.random.default_rng(seed).random((height, width)) > 0.5
        assert (rle_decode(rle_encode(grid)) == grid).all()


class TestMaskIou:
    def test_identical_masks(self):
        mask = rle_encode(grid_from(["##.", ".#."]))
        assert mask_iou(mask, mask) == 1.0

    def test_disjoint_masks(self):
        a = rle_encode(grid_from(["##", ".."]))
        b = rle_encode(grid_from(["..", "##"]))
        assert mask_iou(a, b) == 0.0

    def test_half_overlap_squares(self):
        # 10x10 squares overlapping in a 5x10 strip: 50 / 150
        base = np.zeros((20, 20), dtype=bool)
        a = base.copy()
        a[0:10, 0:10] = True
        b = base.copy()
        b[0:10, 5:15] = True
        assert mask_iou(rle_encode(a), rle_encode(b)) == pytest.approx(50 / 150, abs=1e-12)

    def test_matches_pixel_counting_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.random((13, 9)) > 0.6
            b = rng.random((13, 9)) > 0.6
            assert mask_iou(rle_encode(a), rle_encode(b)) == pytest.approx(
                pixel_iou_oracle(a, b), abs=1e-12
            )

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            a = rle_encode(rng.random((6, 7)) > 0.5)
            b = rle_encode(rng.random((6, 7)) > 0.5)
            assert mask_iou(a, b) == mask_iou(b, a)
            assert 0.0 <= mask_iou(a, b) <= 1.0

    def test_empty_union_is_zero(self):
        a = rle_encode(np.zeros((3, 3), dtype=bool))
        assert mask_iou(a, a) == 0.0

    def test_dimension_mismatch(self):
        a = rle_encode(np.ones((2, 2), dtype=bool))
        b = rle_encode(np.ones((2, 3), dtype=bool))
        with pytest.raises(ValueError):
            mask_iou(a, b)


class TestBBox:
    def test_identical(self):
        box = BBox(0, 0, 10, 10)
        assert bbox_iou(box, box) == 1.0

    def test_touching_edges(self):
        assert bbox_iou(BBox(0, 0, 5, 5), BBox(5, 0, 10, 5)) == 0.0

    def test_half_open_overlap(self):
        assert bbox_iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(
            50 / 150, abs=1e-12
        )

    def test_invalid_extents_rejected(self):
        with pytest.raises(ValueError):
            BBox(5, 0, 0, 5)


class TestTightBBox:
    def test_single_pixel(self):
        grid = np.zeros((10, 10), dtype=bool)
        grid[7, 3] = True
        assert tight_bbox(rle_encode(grid)).as_tuple() == (3, 7, 4, 8)

    def test_full_mask(self):
        grid = np.ones((4, 6), dtype=bool)
        assert tight_bbox(rle_encode(grid)).as_tuple() == (0, 0, 6, 4)

    def test_random_sparse_matches_scan(self):
        rng = np.random.default_rng(9)
        for _ in range(15):
            grid = rng.random((11, 17)) > 0.9
            if not grid.any():
                continue
            box = tight_bbox(rle_encode(grid))
            xs = [x for y in range(11) for x in range(17) if grid[y, x]]
            ys = [y for y in range(11) for x in range(17) if grid[y, x]]
            assert box.as_tuple() == (min(xs), min(ys), max(xs) + 1, max(ys) + 1)

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            tight_bbox(rle_encode(np.zeros((3, 3), dtype=bool)))


class TestMotionParams:
    def test_prismatic_rejects_origin(self):
        with pytest.raises(ValueError):
            MotionParams(MotionType.PRISMATIC, [1, 0, 0], [0, 0, 0], CoordFrame.CAMERA)

    def test_revolute_requires_origin(self):
        with pytest.raises(ValueError):
            MotionParams(MotionType.REVOLUTE, [1, 0, 0], None, CoordFrame.CAMERA)

    def test_axis_normalized(self):
        m = MotionParams(MotionType.PRISMATIC, [0, 0, 3.0], None, CoordFrame.CAMERA)
        assert np.linalg.norm(m.axis) == pytest.approx(1.0, abs=1e-12)

    def test_near_zero_axis_rejected(self):
        with pytest.raises(ValueError):
            MotionParams(MotionType.PRISMATIC, [0, 0, 1e-12], None, CoordFrame.CAMERA)

    def test_values_are_frozen(self):
        m = MotionParams(MotionType.PRISMATIC, [0, 0, 1], None, CoordFrame.CAMERA)
        with pytest.raises(ValueError):
            m.axis[0] = 5.0


class TestMetricConfig:
    def test_defaults(self):
        config = MetricConfig()
        assert config.iou_threshold == 0.5
        assert config.axis_threshold_deg == 10.0
        assert config.origin_threshold == 0.25
        assert config.confidence_threshold == 0.8
        assert config.recall_samples == 101

    def test_validation(self):
        with pytest.raises(ValueError):
            MetricConfig(iou_threshold=0.0)
        with pytest.raises(ValueError):
            MetricConfig(matcher="centroid")
