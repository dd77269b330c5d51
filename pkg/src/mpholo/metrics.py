"""Focal-stack simulation and image quality metrics for solver results.

reconstruct_stack replays the exact forward model a solver optimized
against, so report numbers measure the hologram, not a different simulator.
PSNR splits three ways per plane: full frame, in-focus pixels only, and
out-of-focus pixels scored against the Gaussian-blurred cross-plane
reference. The last one is the defocus-realism number: a solver that paints
out-of-focus regions black or speckled craters it, a solver that reproduces
the blur keeps it close to its in-focus score.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigurationError, MetricError
from .field import ComplexField, from_amplitude_phase
from .loss import LossWeights
from .solvers import (HologramPhase, SolverConfig, SolverTrace, _propagate_to_plane,
                      export_phase)
from .targeting import PlaneTargetSet


@dataclass
class FocalStack:
    """Per-plane reconstruction intensities |U_k|^2 with their offsets."""

    intensities: tuple
    plane_offsets: tuple

    def __post_init__(self):
        self.intensities = tuple(np.asarray(i, dtype=np.float64) for i in self.intensities)
        self.plane_offsets = tuple(float(d) for d in self.plane_offsets)
        if len(self.intensities) != len(self.plane_offsets):
            raise ConfigurationError("intensities and plane_offsets lengths differ")


def reconstruct_stack_from_phase(phase_grid: np.ndarray, config: SolverConfig) -> FocalStack:
    """Simulate a display-ready phase grid at every configured plane."""
    if config.plane_offsets is None:
        raise ConfigurationError("reconstruct needs plane_offsets set on the solver config")
    band_limit = config.resolved_band_limit()
    hologram = from_amplitude_phase(np.ones(config.optical.shape),
                                    np.asarray(phase_grid, dtype=np.float64),
                                    config.optical)
    intensities = []
    for delta in config.plane_offsets:
        u = _propagate_to_plane(hologram, float(delta), config, band_limit)
        intensities.append((u.values * u.values.conj()).real)
    return FocalStack(tuple(intensities), tuple(config.plane_offsets))


def reconstruct_stack(hologram: HologramPhase, config: SolverConfig) -> FocalStack:
    """Simulate a solver result; applies the export-time constraint first."""
    return reconstruct_stack_from_phase(export_phase(hologram, config), config)


# ---------------------------------------------------------------------------
# Metrics


def psnr(a: np.ndarray, b: np.ndarray, peak: float) -> float:
    """10*log10(peak^2 / mse); +inf on an exact match."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"psnr shapes differ: {a.shape} vs {b.shape}")
    if not (peak > 0):
        raise MetricError(f"psnr peak must be positive, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def masked_psnr(a: np.ndarray, b: np.ndarray, mask: np.ndarray, peak: float) -> float:
    """PSNR over the pixels where the binary mask is one."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if a.shape != b.shape or a.shape != mask.shape:
        raise ConfigurationError("masked_psnr needs three same-shaped grids")
    if not (peak > 0):
        raise MetricError(f"psnr peak must be positive, got {peak}")
    count = float(mask.sum())
    if count == 0:
        raise MetricError("mask selects no pixels; masked PSNR is undefined")
    mse = float(np.sum(mask * (a - b) ** 2) / count)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


_SSIM_SIGMA = 1.5
_SSIM_TRUNCATE = 3.5  # 11x11 window at sigma 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def ssim(a: np.ndarray, b: np.ndarray, data_range: float | None = None) -> float:
    """Mean structural similarity with the standard 11x11 Gaussian window."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigurationError(f"ssim shapes differ: {a.shape} vs {b.shape}")
    radius = int(_SSIM_TRUNCATE * _SSIM_SIGMA + 0.5)
    win = 2 * radius + 1
    if min(a.shape) < win:
        raise MetricError(f"ssim needs grids of at least {win} pixels per side")
    if data_range is None:
        lo = min(a.min(), b.min())
        hi = max(a.max(), b.max())
        data_range = hi - lo
        if data_range == 0:
            return 1.0 if np.array_equal(a, b) else 0.0

    def filt(x):
        return gaussian_filter(x, sigma=_SSIM_SIGMA, truncate=_SSIM_TRUNCATE, mode="reflect")

    ux = filt(a)
    uy = filt(b)
    vx = filt(a * a) - ux * ux
    vy = filt(b * b) - uy * uy
    vxy = filt(a * b) - ux * uy
    c1 = (_SSIM_K1 * data_range) ** 2
    c2 = (_SSIM_K2 * data_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    return float(s[radius:-radius, radius:-radius].mean())


# ---------------------------------------------------------------------------
# Report


@dataclass
class PlaneMetrics:
    """One plane's scores; None marks a metric with an empty mask."""

    plane_offset: float
    loss_total: float
    loss_full_term: float
    loss_focus_term: float
    psnr_full: float
    psnr_in_focus: float | None
    psnr_out_of_focus: float | None
    ssim: float


@dataclass
class ReconstructionReport:
    planes: list
    final_objective: float
    iterations: int
    wall_time: float
    config_echo: dict = field(default_factory=dict)
    trace_losses: tuple = ()


def build_report(stack: FocalStack, targets: PlaneTargetSet, weights: LossWeights,
                 compare_amplitude: bool = False, square_target_reference: bool = False,
                 trace: SolverTrace | None = None, config_echo: dict | None = None
                 ) -> ReconstructionReport:
    """Score a focal stack against its target set.

    References default to the amplitude-valued plane targets; with
    square_target_reference the targets (and defocus references) are squared
    before comparison. The PSNR peak is the maximum over the reference stack.
    """
    if len(stack.intensities) != targets.n_planes:
        raise ConfigurationError("stack and target plane counts differ")

    def ref(grid):
        return grid * grid if square_target_reference else grid

    references = [ref(t) for t in targets.targets]
    defocus_refs = [ref(r) for r in targets.defocus_reference]
    peak = max(float(r.max()) for r in references)
    if peak <= 0:
        peak = 1.0

    planes = []
    total_objective = 0.0
    for k in range(targets.n_planes):
        intensity = stack.intensities[k]
        recon = np.sqrt(intensity) if compare_amplitude else intensity
        diff = targets.targets[k] - recon
        full_term = float(weights.m0 * np.mean(diff * diff))
        focus_term = float(weights.m1 * np.mean((targets.masks[k] * diff) ** 2))
        loss_total = full_term + focus_term
        total_objective += loss_total

        mask = targets.masks[k]
        inv_mask = 1.0 - mask
        try:
            in_focus = masked_psnr(intensity, references[k], mask, peak)
        except MetricError:
            in_focus = None
        try:
            out_focus = masked_psnr(intensity, defocus_refs[k], inv_mask, peak)
        except MetricError:
            out_focus = None
        planes.append(PlaneMetrics(
            plane_offset=stack.plane_offsets[k],
            loss_total=loss_total,
            loss_full_term=full_term,
            loss_focus_term=focus_term,
            psnr_full=psnr(intensity, references[k], peak),
            psnr_in_focus=in_focus,
            psnr_out_of_focus=out_focus,
            ssim=ssim(intensity, references[k], data_range=peak),
        ))

    return ReconstructionReport(
        planes=planes,
        final_objective=total_objective,
        iterations=0 if trace is None else int(len(trace.losses)),
        wall_time=0.0 if trace is None else float(trace.wall_time),
        config_echo=dict(config_echo or {}),
        trace_losses=() if trace is None else tuple(float(x) for x in trace.losses),
    )


def _encode_floats(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {k: _encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_floats(v) for v in obj]
    return obj


def _decode_floats(obj):
    if isinstance(obj, str) and obj in ("inf", "-inf", "nan"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _decode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_floats(v) for v in obj]
    return obj


def report_to_jsonable(report: ReconstructionReport) -> dict:
    """Plain-JSON dict; non-finite floats become the strings inf/-inf/nan."""
    return _encode_floats(asdict(report))


def report_from_jsonable(data: dict) -> ReconstructionReport:
    data = _decode_floats(dict(data))
    planes = [PlaneMetrics(**p) for p in data.pop("planes")]
    data["trace_losses"] = tuple(data.get("trace_losses", ()))
    return ReconstructionReport(planes=planes, **data)
