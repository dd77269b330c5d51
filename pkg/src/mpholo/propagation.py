"""Angular spectrum propagation between parallel planes.

The transfer function advances each plane-wave component exp(2*pi*i*(fx*x+fy*y))
by exp(2*pi*i*d*sqrt(1/wavelength^2 - fx^2 - fy^2)). Evanescent components
(fx^2 + fy^2 >= 1/wavelength^2) are zeroed, and by default so is everything
outside the anti-aliasing band limit for the requested distance, which keeps
long single hops free of wrap-around ghosts.

The flagship image formation model is a long hop away from the hologram and
almost all the way back:

    forward_model_near(h, r, d) = propagate(propagate(h, r), -r + d)

On the shared band support the +r/-r pair composes, frequency by frequency,
to the kernel of the net millimetre-scale distance d. With the band limit on
(the default everywhere) each long hop also low-passes the field to the
frequencies it can carry without wrap-around, which is what lets the pair
shape intensity at d = 0, the hologram plane itself: the limit plays the role
of the aperture filter in a physical double-phase setup. Disabling the limit
turns the pair into the exact unitary kernel of distance d, useful for
round-trip and adjoint identity tests but useless for imaging at d = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .field import ComplexField, OpticalConfig


@dataclass(frozen=True)
class TransferFunction:
    """Frequency-domain kernel for one (config, distance) pair.

    values has unit modulus on its support and is exactly zero elsewhere;
    the array is read-only because instances are shared through a cache.
    """

    values: np.ndarray
    distance: float
    config: OpticalConfig
    band_limited: bool


@lru_cache(maxsize=256)
def _transfer_grid(wavelength: float, pixel_pitch: float, height: int, width: int,
                   distance: float, band_limit: bool) -> np.ndarray:
    fy = np.fft.fftfreq(height, d=pixel_pitch)
    fx = np.fft.fftfreq(width, d=pixel_pitch)
    fyy, fxx = np.meshgrid(fy, fx, indexing="ij")
    f_sq = fxx * fxx + fyy * fyy

    inv_wl_sq = 1.0 / (wavelength * wavelength)
    propagating = f_sq < inv_wl_sq

    # cycles of phase accumulated by each component over the hop
    s = np.sqrt(np.maximum(inv_wl_sq - f_sq, 0.0))
    # Reduce modulo one cycle in extended precision: a 30 cm hop winds up
    # ~5e5 cycles, and plain float64 phase would carry ~1e-9 rounding that
    # breaks the exact +r/-r+d pair composition the near model relies on.
    cycles = np.longdouble(distance) * s.astype(np.longdouble)
    frac = (cycles - np.floor(cycles)).astype(np.float64)
    h = np.exp((2j * np.pi) * frac)

    mask = propagating
    if band_limit:
        # local-frequency aliasing bound for a hop of this length
        dv = 1.0 / (height * pixel_pitch)
        du = 1.0 / (width * pixel_pitch)
        fy_lim = 1.0 / (wavelength * np.sqrt((2.0 * dv * abs(distance)) ** 2 + 1.0))
        fx_lim = 1.0 / (wavelength * np.sqrt((2.0 * du * abs(distance)) ** 2 + 1.0))
        mask = mask & (np.abs(fxx) <= fx_lim) & (np.abs(fyy) <= fy_lim)

    h = np.where(mask, h, 0.0 + 0.0j)
    h.flags.writeable = False
    return h


def transfer_function(config: OpticalConfig, distance: float,
                      band_limit: bool = True) -> TransferFunction:
    """Cached angular spectrum kernel; distance may be negative or zero."""
    grid = _transfer_grid(config.wavelength, config.pixel_pitch,
                          config.height, config.width, float(distance), bool(band_limit))
    return TransferFunction(grid, float(distance), config, bool(band_limit))


def clear_transfer_cache() -> None:
    _transfer_grid.cache_clear()


def propagate(field: ComplexField, distance: float, band_limit: bool = True) -> ComplexField:
    """Propagate a field by a signed distance along the optical axis."""
    h = transfer_function(field.config, distance, band_limit).values
    spectrum = np.fft.fft2(field.values, norm="ortho")
    out = np.fft.ifft2(spectrum * h, norm="ortho")
    return ComplexField(out, field.config)


def propagate_adjoint(cotangent: ComplexField, distance: float,
                      band_limit: bool = True) -> ComplexField:
    """Adjoint of propagate under the real inner product 2*Re<a, b>.

    Multiplies the spectrum by conj(H) instead of H, which is what pulls a
    loss gradient back from a reconstruction plane to the hologram plane.
    """
    h = transfer_function(cotangent.config, distance, band_limit).values
    spectrum = np.fft.fft2(cotangent.values, norm="ortho")
    out = np.fft.ifft2(spectrum * h.conj(), norm="ortho")
    return ComplexField(out, cotangent.config)


def forward_model_near(hologram: ComplexField, hop_distance: float, plane_offset: float,
                       band_limit: bool = True) -> ComplexField:
    """Image formation near the hologram via a long hop and near-full return."""
    if not (hop_distance > 0):
        raise ConfigurationError(f"hop_distance must be positive, got {hop_distance}")
    away = propagate(hologram, hop_distance, band_limit)
    return propagate(away, -hop_distance + plane_offset, band_limit)


def forward_model_far(hologram: ComplexField, distance: float,
                      band_limit: bool = True) -> ComplexField:
    """Single-hop image formation at a plane far from the hologram."""
    return propagate(hologram, distance, band_limit)
