"""The procedural three-rectangle scene and its plane assignment."""

import numpy as np
import pytest

from mpholo.errors import ConfigurationError
from mpholo.scenes import builtin_scene, three_rectangles
from mpholo.targeting import focus_masks, quantize_depth

# frozen pixel budgets of the default 256 x 256 layout
PLANE_AREAS_256 = (12084, 42640, 10812)


class TestThreeRectangles:
    def test_shape_and_value_ranges(self):
        scene = three_rectangles()
        assert scene.image.shape == (256, 256)
        assert scene.depth.shape == (256, 256)
        assert 0.0 <= scene.image.min() and scene.image.max() <= 1.0
        assert 0.0 <= scene.depth.min() and scene.depth.max() <= 1.0

    def test_three_planes_occupied(self):
        scene = three_rectangles()
        indices = quantize_depth(scene.depth, 3)
        masks = focus_masks(indices, 3)
        assert tuple(int(m.sum()) for m in masks) == PLANE_AREAS_256
        assert np.array_equal(sum(masks), np.ones((256, 256)))

    def test_rectangles_are_sharp(self):
        # exactly four gray levels: background plus three rectangle fills
        scene = three_rectangles()
        assert len(np.unique(scene.image)) == 4

    def test_margins_from_frame_border(self):
        # propagation wraps at the frame edge, so content keeps its distance
        scene = three_rectangles()
        indices = quantize_depth(scene.depth, 3)
        for k in (0, 2):  # rectangle-only planes
            rows, cols = np.nonzero(indices == k)
            assert rows.min() >= 14 and rows.max() <= 241
            assert cols.min() >= 14 and cols.max() <= 241

    def test_scales_to_other_sizes(self):
        scene = three_rectangles(128, 128)
        assert scene.image.shape == (128, 128)
        indices = quantize_depth(scene.depth, 3)
        assert {0, 1, 2} == set(np.unique(indices).tolist())

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ConfigurationError):
            three_rectangles(15, 16)
        with pytest.raises(ConfigurationError):
            three_rectangles(8, 8)


class TestBuiltinDispatch:
    def test_known_name(self):
        scene = builtin_scene("three-rectangles", 64, 64)
        assert scene.image.shape == (64, 64)

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError):
            builtin_scene("four-circles")
