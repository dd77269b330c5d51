"""Complex scalar fields sampled on a regular grid, plus unitary transforms.

Everything downstream (propagation, solvers, metrics) moves complex64-bit
float pairs through these containers, so the conventions set here are the
conventions of the whole package: float64/complex128 arithmetic, unitary
FFTs, and phase values in (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Laser lines of the target display (blue, green, red), in meters.
DEFAULT_WAVELENGTHS = (473e-9, 515e-9, 639e-9)
DEFAULT_PIXEL_PITCH = 8e-6


@dataclass(frozen=True)
class OpticalConfig:
    """Physical sampling of a monochromatic field.

    Grid dimensions must be even: the checkerboard phase constraint and the
    double phase encoding both need an exact two-colour tiling of the grid.
    """

    wavelength: float
    pixel_pitch: float = DEFAULT_PIXEL_PITCH
    height: int = 256
    width: int = 256

    def __post_init__(self):
        if not (self.wavelength > 0):
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        if not (self.pixel_pitch > 0):
            raise ConfigurationError(f"pixel_pitch must be positive, got {self.pixel_pitch}")
        for name in ("height", "width"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 2 or n % 2 != 0:
                raise ConfigurationError(f"{name} must be an even integer >= 2, got {n}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass
class ComplexField:
    """A complex amplitude grid tied to its physical sampling."""

    values: np.ndarray
    config: OpticalConfig

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.config.shape:
            raise ConfigurationError(
                f"field shape {values.shape} does not match config shape {self.config.shape}"
            )
        if not np.isfinite(values).all():
            raise ConfigurationError("field contains non-finite values")
        self.values = values


def from_amplitude_phase(amplitude, phase, config: OpticalConfig) -> ComplexField:
    """Build a field as amplitude * exp(i * phase)."""
    amplitude = np.asarray(amplitude, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    if amplitude.shape != config.shape or phase.shape != config.shape:
        raise ConfigurationError(
            f"amplitude {amplitude.shape} / phase {phase.shape} do not match "
            f"config shape {config.shape}"
        )
    if np.any(amplitude < 0):
        raise ConfigurationError("amplitude must be non-negative")
    return ComplexField(amplitude * np.exp(1j * phase), config)


def fft2(field: ComplexField) -> ComplexField:
    """Unitary 2-D FFT (1/sqrt(H*W) normalization in both directions)."""
    return ComplexField(np.fft.fft2(field.values, norm="ortho"), field.config)


def ifft2(field: ComplexField) -> ComplexField:
    """Unitary 2-D inverse FFT."""
    return ComplexField(np.fft.ifft2(field.values, norm="ortho"), field.config)


def amplitude(field: ComplexField) -> np.ndarray:
    return np.abs(field.values)


def phase(field: ComplexField) -> np.ndarray:
    """Phase in (-pi, pi]; a zero-amplitude pixel reports phase 0."""
    ang = np.angle(field.values)
    # atan2(-0., x<0) lands on -pi; fold it onto +pi to keep the stated range
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.where(field.values == 0, 0.0, ang)


def intensity(field: ComplexField) -> np.ndarray:
    v = field.values
    return (v * v.conj()).real
