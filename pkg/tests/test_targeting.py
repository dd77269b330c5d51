"""Depth slicing, Gaussian defocus ladders, and target composition."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.signal import convolve2d

from mpholo.errors import ConfigurationError
from mpholo.targeting import (RgbdScene, compose_targets, default_plane_offsets,
                              focus_masks, gaussian_blur, gaussian_kernel,
                              quantize_depth)

# closed form for the sigma=1 kernel center: the unnormalized 7x7 grid sums to
# (1 + 2*(e^-0.5 + e^-2 + e^-4.5))^2, frozen from an independent evaluation
KERNEL_CENTER_SIGMA1 = 0.15924112569070248


class TestRgbdScene:
    def test_channel_split(self):
        image = np.stack([np.full((4, 4), 0.1), np.full((4, 4), 0.5),
                          np.full((4, 4), 0.9)], axis=2)
        scene = RgbdScene(image, np.zeros((4, 4)))
        assert scene.n_channels == 3
        assert np.all(scene.channel(1).image == 0.5)

    def test_grayscale_channel_zero_only(self):
        scene = RgbdScene(np.zeros((4, 4)), np.zeros((4, 4)))
        assert scene.channel(0) is scene
        with pytest.raises(ConfigurationError):
            scene.channel(1)

    @pytest.mark.parametrize("image,depth", [
        (np.full((4, 4), 1.5), np.zeros((4, 4))),
        (np.full((4, 4), -0.1), np.zeros((4, 4))),
        (np.zeros((4, 4)), np.full((4, 4), 2.0)),
        (np.zeros((4, 6)), np.zeros((4, 4))),
        (np.zeros((4,)), np.zeros((4, 4))),
    ])
    def test_rejects_bad_input(self, image, depth):
        with pytest.raises(ConfigurationError):
            RgbdScene(image, depth)


class TestQuantizeDepth:
    def test_frozen_three_plane_mapping(self):
        depth = np.array([[0.10, 0.30], [0.60, 0.90]])
        assert quantize_depth(depth, 3).tolist() == [[0, 0], [1, 2]]

    def test_edges(self):
        # exact bin edges land in the higher bin; depth 1.0 stays on the last
        depth = np.array([[0.0, 0.5], [1.0 / 3.0, 1.0]])
        assert quantize_depth(depth, 3).tolist() == [[0, 1], [1, 2]]
        assert quantize_depth(np.array([[0.5, 0.5]] * 2), 2).tolist() == [[1, 1], [1, 1]]

    def test_rejects_bad_plane_counts(self):
        with pytest.raises(ConfigurationError):
            quantize_depth(np.zeros((2, 2)), 1)
        with pytest.raises(ConfigurationError):
            quantize_depth(np.zeros((2, 2)), 17)

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (6, 6), elements=st.floats(0.0, 1.0)),
           st.integers(min_value=2, max_value=16))
    def test_indices_in_range_and_masks_partition(self, depth, n_planes):
        indices = quantize_depth(depth, n_planes)
        assert indices.min() >= 0 and indices.max() <= n_planes - 1
        masks = focus_masks(indices, n_planes)
        assert np.array_equal(sum(masks), np.ones_like(depth))


class TestGaussianKernel:
    def test_frozen_center_value_sigma1(self):
        kernel = gaussian_kernel(1.0)
        assert kernel.shape == (7, 7)
        assert kernel[3, 3] == pytest.approx(KERNEL_CENTER_SIGMA1, abs=1e-15)

    def test_normalized_symmetric_decaying(self):
        kernel = gaussian_kernel(2.5)
        assert kernel.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(kernel, kernel.T)
        assert np.array_equal(kernel, kernel[::-1, ::-1])
        center = kernel.shape[0] // 2
        row = kernel[center]
        assert np.all(np.diff(row[center:]) < 0)

    def test_support_radius(self):
        assert gaussian_kernel(1.5).shape == (2 * math.ceil(4.5) + 1,) * 2

    def test_degenerate_and_invalid(self):
        assert np.array_equal(gaussian_kernel(0.0), [[1.0]])
        with pytest.raises(ConfigurationError):
            gaussian_kernel(-0.1)


class TestGaussianBlur:
    def test_matches_direct_convolution(self, rng):
        image = rng.uniform(0.0, 1.0, (24, 20))
        for sigma in (0.7, 1.0, 3.0):
            direct = convolve2d(image, gaussian_kernel(sigma), mode="same")
            assert np.max(np.abs(gaussian_blur(image, sigma) - direct)) <= 1e-12

    def test_sigma_zero_is_identity_copy(self, rng):
        image = rng.uniform(0.0, 1.0, (8, 8))
        out = gaussian_blur(image, 0.0)
        assert np.array_equal(out, image)
        assert out is not image

    def test_never_negative(self):
        image = np.zeros((16, 16))
        image[8, 8] = 1.0
        assert gaussian_blur(image, 2.0).min() >= 0.0


class TestPlaneOffsets:
    def test_frozen_defaults(self):
        assert default_plane_offsets(3) == (1e-3, 0.0, -1e-3)
        assert default_plane_offsets(4, 2e-3) == (3e-3, 1e-3, -1e-3, -3e-3)

    def test_nearest_plane_gets_largest_offset(self):
        offsets = default_plane_offsets(5)
        assert offsets[0] == max(offsets)
        assert np.allclose(np.diff(offsets), -1e-3)


def tiny_scene():
    image = np.full((16, 16), 0.2)
    depth = np.full((16, 16), 0.9)
    image[2:6, 2:6] = 0.8
    depth[2:6, 2:6] = 0.1
    image[9:13, 9:13] = 0.6
    depth[9:13, 9:13] = 0.5
    return RgbdScene(image, depth)


class TestComposeTargets:
    def test_ours_decomposition(self):
        scene = tiny_scene()
        result = compose_targets(scene, 3, w0=0.5, w1=2.0, w2=3.0, sigma0=1.0)
        indices = quantize_depth(scene.depth, 3)
        masks = focus_masks(indices, 3)
        for k in range(3):
            focus = masks[k] * scene.image
            defocus = sum(gaussian_blur(masks[j] * scene.image, 1.0 * abs(j - k))
                          for j in range(3) if j != k)
            expected = 3.0 * (0.5 * defocus + 2.0 * focus)
            assert np.max(np.abs(result.targets[k] - expected)) <= 1e-12
            assert np.max(np.abs(result.defocus_reference[k] - 3.0 * 0.5 * defocus)) <= 1e-12

    def test_naive_keeps_focus_only_but_same_reference(self):
        scene = tiny_scene()
        ours = compose_targets(scene, 3, sigma0=1.0, mode="ours")
        naive = compose_targets(scene, 3, sigma0=1.0, mode="naive")
        for k in range(3):
            assert np.array_equal(naive.targets[k], naive.masks[k] * scene.image)
            assert np.array_equal(naive.defocus_reference[k], ours.defocus_reference[k])

    def test_masks_partition_and_offsets_default(self):
        result = compose_targets(tiny_scene(), 3)
        assert np.array_equal(sum(result.masks), np.ones((16, 16)))
        assert result.plane_offsets == (1e-3, 0.0, -1e-3)

    def test_explicit_offsets_override(self):
        result = compose_targets(tiny_scene(), 3, plane_offsets=(5e-3, 0.0, -5e-3))
        assert result.plane_offsets == (5e-3, 0.0, -5e-3)
        with pytest.raises(ConfigurationError):
            compose_targets(tiny_scene(), 3, plane_offsets=(1e-3, 0.0))

    def test_single_plane_degenerate(self):
        result = compose_targets(tiny_scene(), 1)
        assert result.n_planes == 1
        assert np.array_equal(result.masks[0], np.ones((16, 16)))
        assert np.array_equal(result.targets[0], tiny_scene().image)
        assert np.array_equal(result.defocus_reference[0], np.zeros((16, 16)))

    def test_rejects_bad_arguments(self):
        scene = tiny_scene()
        with pytest.raises(ConfigurationError):
            compose_targets(scene, 3, mode="fancy")
        with pytest.raises(ConfigurationError):
            compose_targets(scene, 3, w1=0.0)
        with pytest.raises(ConfigurationError):
            compose_targets(scene, 3, sigma0=-1.0)
        rgb = RgbdScene(np.zeros((8, 8, 3)), np.zeros((8, 8)))
        with pytest.raises(ConfigurationError):
            compose_targets(rgb, 3)

    def test_in_focus_content_survives_unchanged_far_from_edges(self):
        # deeper into a focused region than the blur kernels reach, the
        # target equals the plain in-focus content
        image = np.full((32, 32), 0.2)
        depth = np.full((32, 32), 0.9)
        image[4:20, 4:20] = 0.8
        depth[4:20, 4:20] = 0.1
        result = compose_targets(RgbdScene(image, depth), 3, sigma0=0.5)
        k = 0  # depth 0.1 quantizes to plane 0; kernel radius is 3 px at most
        assert result.targets[k][12, 12] == pytest.approx(0.8, abs=1e-12)
