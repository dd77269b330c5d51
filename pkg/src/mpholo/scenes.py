"""Procedurally generated test scenes."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .targeting import RgbdScene

BUILTIN_SCENES = ("three-rectangles",)

# Layout in 1/128ths of the frame: (r0, r1, c0, c1, level, depth), far to near.
# Margins keep every edge at least 14 px (at 256) away from the wrap-around
# frame border and from rectangles on other planes, the background sits on the
# middle plane so each rectangle plane only sees narrow defocus skirts, and the
# low contrast steps keep edge overshoot small under band-limited propagation.
_RECTS = (
    (7, 58, 8, 61, 0.76, 0.90),
    (33, 89, 68, 121, 0.78, 0.50),
    (64, 121, 8, 61, 0.75, 0.10),
)
_BACKGROUND_LEVEL = 0.70
_BACKGROUND_DEPTH = 0.50


def three_rectangles(height: int = 256, width: int = 256) -> RgbdScene:
    """Three sharp rectangles at distinct depths over a mid-gray background.

    Depth 0 is nearest the viewer. The rectangles land on planes 0, 1 and 2
    when quantized to three planes; the background shares the middle plane.
    """
    if height < 16 or width < 16 or height % 2 or width % 2:
        raise ConfigurationError("scene dimensions must be even and at least 16")
    image = np.full((height, width), _BACKGROUND_LEVEL)
    depth = np.full((height, width), _BACKGROUND_DEPTH)
    for r0, r1, c0, c1, level, d in _RECTS:
        rows = slice(r0 * height // 128, r1 * height // 128)
        cols = slice(c0 * width // 128, c1 * width // 128)
        image[rows, cols] = level
        depth[rows, cols] = d
    return RgbdScene(image, depth)


def builtin_scene(name: str, height: int = 256, width: int = 256) -> RgbdScene:
    if name == "three-rectangles":
        return three_rectangles(height, width)
    raise ConfigurationError(f"unknown builtin scene {name!r}; choices: {BUILTIN_SCENES}")
