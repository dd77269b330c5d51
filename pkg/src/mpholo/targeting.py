"""Slice an RGBD scene into per-plane amplitude targets and focus masks.

A depth map is quantized into up to 16 planes. Each plane's target keeps the
scene content that is in focus there, and, in the "ours" mode, adds every
other plane's content blurred by a Gaussian whose width grows linearly with
the plane separation. Asking the solver to reproduce that blurred content is
what makes out-of-focus regions of the reconstruction look like incoherent
camera defocus instead of speckled or black holes. The "naive" mode keeps
only the in-focus content and leaves the rest of each plane dark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError

MAX_PLANES = 16


@dataclass(frozen=True)
class RgbdScene:
    """Image in [0, 1] (grayscale or multi-channel) with an aligned depth map.

    Depth 0 is nearest to the viewer, depth 1 farthest.
    """

    image: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        image = np.asarray(self.image, dtype=np.float64)
        depth = np.asarray(self.depth, dtype=np.float64)
        if image.ndim not in (2, 3):
            raise ConfigurationError(f"image must be HxW or HxWxC, got shape {image.shape}")
        if depth.ndim != 2:
            raise ConfigurationError(f"depth must be HxW, got shape {depth.shape}")
        if image.shape[:2] != depth.shape:
            raise ConfigurationError(
                f"image shape {image.shape[:2]} does not match depth shape {depth.shape}"
            )
        for name, arr in (("image", image), ("depth", depth)):
            if not np.isfinite(arr).all():
                raise ConfigurationError(f"{name} contains non-finite values")
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ConfigurationError(f"{name} values must lie in [0, 1]")
        object.__setattr__(self, "image", image)
        object.__setattr__(self, "depth", depth)

    @property
    def n_channels(self) -> int:
        return 1 if self.image.ndim == 2 else self.image.shape[2]

    def channel(self, index: int) -> "RgbdScene":
        if self.image.ndim == 2:
            if index != 0:
                raise ConfigurationError(f"grayscale scene has no channel {index}")
            return self
        return RgbdScene(self.image[:, :, index], self.depth)


@dataclass
class PlaneTargetSet:
    """Per-plane amplitude targets, binary focus masks, and plane offsets.

    masks partition the grid (they sum to exactly one everywhere) and
    defocus_reference holds the blurred cross-plane content used to score
    out-of-focus realism, regardless of which mode produced the targets.
    """

    targets: tuple
    masks: tuple
    plane_offsets: tuple
    defocus_reference: tuple
    weights: tuple = (1.0, 1.0, 1.0)
    blur_base: float = 2.0
    mode: str = "ours"

    def __post_init__(self):
        n = len(self.targets)
        if not (1 <= n <= MAX_PLANES):
            raise ConfigurationError(f"plane count must be in [1, {MAX_PLANES}], got {n}")
        if len(self.masks) != n or len(self.plane_offsets) != n or len(self.defocus_reference) != n:
            raise ConfigurationError("targets, masks, offsets, defocus_reference lengths differ")
        targets = tuple(np.asarray(t, dtype=np.float64) for t in self.targets)
        masks = tuple(np.asarray(m, dtype=np.float64) for m in self.masks)
        refs = tuple(np.asarray(r, dtype=np.float64) for r in self.defocus_reference)
        shape = targets[0].shape
        for t in targets + masks + refs:
            if t.shape != shape:
                raise ConfigurationError("all plane grids must share one shape")
        for t in targets + refs:
            if not np.isfinite(t).all() or t.min() < 0.0:
                raise ConfigurationError("plane targets must be finite and non-negative")
        for m in masks:
            if not np.isin(m, (0.0, 1.0)).all():
                raise ConfigurationError("masks must be binary")
        if np.any(sum(masks) != 1.0):
            raise ConfigurationError("masks must partition the grid (sum to one everywhere)")
        self.targets = targets
        self.masks = masks
        self.defocus_reference = refs
        self.plane_offsets = tuple(float(d) for d in self.plane_offsets)

    @property
    def n_planes(self) -> int:
        return len(self.targets)

    @property
    def shape(self) -> tuple[int, int]:
        return self.targets[0].shape


def quantize_depth(depth: np.ndarray, n_planes: int) -> np.ndarray:
    """Map depths in [0, 1] to plane indices 0..n_planes-1.

    index = min(floor(depth * n_planes), n_planes - 1), so exact bin edges
    fall into the higher bin and depth 1.0 lands on the last plane.
    """
    if not (2 <= n_planes <= MAX_PLANES):
        raise ConfigurationError(f"n_planes must be in [2, {MAX_PLANES}], got {n_planes}")
    depth = np.asarray(depth, dtype=np.float64)
    if not np.isfinite(depth).all() or depth.min() < 0.0 or depth.max() > 1.0:
        raise ConfigurationError("depth values must be finite and lie in [0, 1]")
    idx = np.floor(depth * n_planes).astype(np.int64)
    return np.minimum(idx, n_planes - 1)


def focus_masks(plane_indices: np.ndarray, n_planes: int) -> list[np.ndarray]:
    """One binary mask per plane; masks partition the grid by construction."""
    return [(plane_indices == k).astype(np.float64) for k in range(n_planes)]


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian with support radius ceil(3*sigma).

    sigma = 0 degenerates to the 1x1 identity kernel.
    """
    if sigma < 0:
        raise ConfigurationError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return np.array([[1.0]])
    radius = math.ceil(3.0 * sigma)
    coords = np.arange(-radius, radius + 1, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    kernel = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """FFT-based linear convolution with zero padding outside the grid."""
    image = np.asarray(image, dtype=np.float64)
    if sigma == 0:
        return image.copy()
    out = fftconvolve(image, gaussian_kernel(sigma), mode="same")
    # fftconvolve leaves tiny negative residue on exact zeros
    return np.maximum(out, 0.0)


def default_plane_offsets(n_planes: int, spacing: float = 1e-3) -> tuple:
    """Signed propagation offsets, centered on the hologram return plane.

    Plane 0 holds the content nearest the viewer and therefore sits at the
    largest offset along the propagation direction; offsets descend from
    +(n-1)/2 * spacing to -(n-1)/2 * spacing.
    """
    half = (n_planes - 1) / 2.0
    return tuple((half - k) * spacing for k in range(n_planes))


def compose_targets(scene: RgbdScene, n_planes: int, w0: float = 1.0, w1: float = 1.0,
                    w2: float = 1.0, sigma0: float = 2.0, mode: str = "ours",
                    plane_spacing: float = 1e-3, plane_offsets=None) -> PlaneTargetSet:
    """Build the per-plane target set for one colour channel.

    For plane k with focus mask M_k, target image P and blur base sigma0:

        focus_k   = M_k * P
        defocus_k = sum over j != k of blur(M_j * P, sigma0 * |j - k|)
        target_k  = w2 * (w0 * defocus_k + w1 * focus_k)      (mode "ours")
        target_k  = M_k * P                                   (mode "naive")

    defocus_k is kept on the result in both modes as the reference a
    reconstruction's out-of-focus regions are scored against.
    """
    if scene.image.ndim != 2:
        raise ConfigurationError("compose_targets works on one channel; use scene.channel(i)")
    if mode not in ("ours", "naive"):
        raise ConfigurationError(f"unknown targeting mode {mode!r}")
    if mode == "ours" and not (w0 > 0 and w1 > 0 and w2 > 0):
        raise ConfigurationError("weights must be positive for mode 'ours'")
    if sigma0 < 0:
        raise ConfigurationError(f"sigma0 must be non-negative, got {sigma0}")

    if n_planes == 1:
        # degenerate single-plane set, used by fixed-point style tests
        indices = np.zeros(scene.depth.shape, dtype=np.int64)
    else:
        indices = quantize_depth(scene.depth, n_planes)
    masks = focus_masks(indices, n_planes)
    image = scene.image
    layers = [m * image for m in masks]

    defocus = []
    for k in range(n_planes):
        acc = np.zeros_like(image)
        for j in range(n_planes):
            if j == k:
                continue
            acc += gaussian_blur(layers[j], sigma0 * abs(j - k))
        defocus.append(acc)

    if mode == "ours":
        targets = [w2 * (w0 * defocus[k] + w1 * layers[k]) for k in range(n_planes)]
    else:
        targets = [layers[k].copy() for k in range(n_planes)]
    reference = [w2 * w0 * defocus[k] for k in range(n_planes)]

    if plane_offsets is None:
        plane_offsets = default_plane_offsets(n_planes, plane_spacing)
    elif len(plane_offsets) != n_planes:
        raise ConfigurationError(
            f"got {len(plane_offsets)} plane offsets for {n_planes} planes"
        )

    return PlaneTargetSet(
        targets=tuple(targets),
        masks=tuple(masks),
        plane_offsets=tuple(plane_offsets),
        defocus_reference=tuple(reference),
        weights=(float(w0), float(w1), float(w2)),
        blur_base=float(sigma0),
        mode=mode,
    )
