"""File formats: scene PNGs, hologram PNGs with JSON sidecars, reports, traces.

Hologram phases are wrapped into [0, 2*pi) and quantized to 8 bits with
256 levels per cycle, floor(phi * 256 / (2*pi) + 0.5) mod 256, so one phase
level is exactly 2*pi/256 and a pi shift is exactly 128 gray levels. The
dequantized phase is off by at most half a level (pi/256).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import ConfigurationError
from .field import DEFAULT_PIXEL_PITCH, OpticalConfig
from .loss import LossWeights
from .metrics import ReconstructionReport, report_to_jsonable
from .scenes import builtin_scene
from .solvers import HologramPhase, SolverConfig
from .targeting import RgbdScene

PHASE_LEVELS = 256


def quantize_phase(phase: np.ndarray) -> np.ndarray:
    """Wrap to [0, 2*pi) and round half up onto 256 levels per cycle."""
    phase = np.asarray(phase, dtype=np.float64)
    wrapped = np.mod(phase, 2.0 * np.pi)
    levels = np.floor(wrapped * (PHASE_LEVELS / (2.0 * np.pi)) + 0.5).astype(np.int64)
    return (levels % PHASE_LEVELS).astype(np.uint8)


def dequantize_phase(levels: np.ndarray) -> np.ndarray:
    return np.asarray(levels, dtype=np.float64) * (2.0 * np.pi / PHASE_LEVELS)


def load_scene(image_path, depth_path) -> RgbdScene:
    """Read an 8-bit grayscale or RGB image PNG plus an 8-bit grayscale depth PNG."""
    image = _read_8bit(image_path, allow_rgb=True, role="image")
    depth = _read_8bit(depth_path, allow_rgb=False, role="depth")
    if image.shape[:2] != depth.shape:
        raise ConfigurationError(
            f"image {Path(image_path).name} has shape {image.shape[:2]} but depth "
            f"{Path(depth_path).name} has shape {depth.shape}"
        )
    return RgbdScene(image / 255.0, depth / 255.0)


def _read_8bit(path, allow_rgb: bool, role: str) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read {role} file {path}: {exc}") from exc
    modes = ("L", "RGB") if allow_rgb else ("L",)
    if img.mode not in modes:
        raise ConfigurationError(
            f"{role} file {path} has mode {img.mode}; expected 8-bit {' or '.join(modes)}"
        )
    return np.asarray(img, dtype=np.float64)


def save_hologram(phase: np.ndarray, path, metadata: dict | None = None) -> Path:
    """Write the 8-bit phase PNG and a JSON sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    levels = quantize_phase(phase)
    Image.fromarray(levels, mode="L").save(path)
    sidecar = {"software_version": __version__,
               "phase_levels": PHASE_LEVELS,
               "height": int(levels.shape[0]),
               "width": int(levels.shape[1])}
    sidecar.update(metadata or {})
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def load_hologram(path) -> tuple[HologramPhase, dict]:
    """Read a hologram PNG back to phase, plus its sidecar metadata if present."""
    path = Path(path)
    img = Image.open(path)
    img.load()
    if img.mode != "L":
        raise ConfigurationError(f"hologram {path} has mode {img.mode}; expected 8-bit L")
    phase = dequantize_phase(np.asarray(img, dtype=np.uint8))
    sidecar_path = path.with_suffix(".json")
    metadata = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else {}
    return HologramPhase(phase, 0.0), metadata


def save_stack_and_report(stack, report: ReconstructionReport, out_dir) -> Path:
    """Write per-plane PNGs (normalized to the stack max), report JSON, trace CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    peak = max(float(i.max()) for i in stack.intensities)
    scale = 255.0 / peak if peak > 0 else 0.0
    for k, plane in enumerate(stack.intensities):
        pixels = np.floor(plane * scale + 0.5).astype(np.uint8)
        Image.fromarray(pixels, mode="L").save(out_dir / f"plane_{k:02d}.png")
    (out_dir / "report.json").write_text(
        json.dumps(report_to_jsonable(report), indent=2, sort_keys=True))
    with open(out_dir / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss"])
        for i, value in enumerate(report.trace_losses):
            writer.writerow([i, repr(value)])
    return out_dir


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class RunConfig:
    """One flat record driving the command line pipeline.

    Scene input is either image+depth paths or a builtin scene name. A
    grayscale image may be paired with any number of wavelengths; an RGB
    image needs exactly three.
    """

    image: str | None = None
    depth: str | None = None
    builtin: str | None = "three-rectangles"
    builtin_height: int = 256
    builtin_width: int = 256
    wavelengths: tuple = (639e-9,)
    pixel_pitch: float = DEFAULT_PIXEL_PITCH
    n_planes: int = 3
    w0: float = 1.0
    w1: float = 1.0
    w2: float = 1.0
    sigma0: float = 2.0
    mode: str = "ours"
    algorithm: str = "sgd_dp"
    iterations: int = 200
    learning_rate: float = 1e-3
    hop_distance: float = 0.30
    plane_spacing: float = 1e-3
    regime: str = "near"
    m0: float = 1.0
    m1: float = 2.1
    phase_init: str = "random"
    initial_offset: float = math.pi / 2.0
    step_per_plane: bool = False
    band_limit: bool | None = None
    output_dir: str = "out"
    seed: int = 0
    grating: bool = False

    def __post_init__(self):
        if not self.wavelengths:
            raise ConfigurationError("wavelengths must not be empty")
        object.__setattr__(self, "wavelengths", tuple(float(w) for w in self.wavelengths))
        if (self.image is None) != (self.depth is None):
            raise ConfigurationError("image and depth paths must be given together")
        if self.image is None and self.builtin is None:
            raise ConfigurationError("config needs either image+depth paths or a builtin scene")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "wavelengths" in data:
            data = dict(data)
            data["wavelengths"] = tuple(data["wavelengths"])
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["wavelengths"] = list(self.wavelengths)
        return data

    def load_scene(self) -> RgbdScene:
        if self.image is not None:
            scene = load_scene(self.image, self.depth)
        else:
            scene = builtin_scene(self.builtin, self.builtin_height, self.builtin_width)
        n_ch = scene.n_channels
        if n_ch > 1 and n_ch != len(self.wavelengths):
            raise ConfigurationError(
                f"scene has {n_ch} channels but config lists {len(self.wavelengths)} wavelengths"
            )
        return scene

    def solver_config(self, wavelength: float, shape: tuple[int, int],
                      plane_offsets=None) -> SolverConfig:
        optical = OpticalConfig(wavelength=wavelength, pixel_pitch=self.pixel_pitch,
                                height=shape[0], width=shape[1])
        return SolverConfig(
            optical=optical,
            algorithm=self.algorithm,
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            hop_distance=self.hop_distance,
            plane_offsets=None if plane_offsets is None else tuple(plane_offsets),
            regime=self.regime,
            loss_weights=LossWeights(self.m0, self.m1),
            phase_init=self.phase_init,
            initial_offset=self.initial_offset,
            step_per_plane=self.step_per_plane,
            band_limit=self.band_limit,
        )

    def with_overrides(self, **kwargs) -> "RunConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        if not kwargs:
            return self
        if "wavelengths" in kwargs:
            kwargs["wavelengths"] = tuple(kwargs["wavelengths"])
        return replace(self, **kwargs)
