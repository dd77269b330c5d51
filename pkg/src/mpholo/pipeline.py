"""End-to-end runs behind the command line: optimize, target, reconstruct, compare."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import ConfigurationError
from .field import OpticalConfig
from .io import (RunConfig, load_hologram, save_hologram, save_stack_and_report)
from .metrics import (build_report, reconstruct_stack, reconstruct_stack_from_phase,
                      report_to_jsonable)
from .solvers import SolverConfig, apply_grating, export_phase, run_solver
from .targeting import compose_targets

NATURAL_REGIME = {"sgd_dp": "near", "gs": "far", "dp": "near"}


def thread_count() -> int:
    raw = os.environ.get("MPHOLO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"MPHOLO_THREADS must be an integer, got {raw!r}") from None


def _compose_for_channel(config: RunConfig, scene, channel_index: int):
    channel = scene.channel(channel_index if scene.n_channels > 1 else 0)
    targets = compose_targets(channel, config.n_planes, config.w0, config.w1, config.w2,
                              config.sigma0, config.mode, plane_spacing=config.plane_spacing)
    return channel, targets


def optimize_run(config: RunConfig, out_dir=None) -> dict:
    """Solve, reconstruct, score and save every channel of a run.

    Single-wavelength runs write into the output directory itself;
    multi-wavelength runs get one channel_<i> subdirectory each. A combined
    run_report.json and the echoed run_config.json land at the root.
    """
    scene = config.load_scene()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(config.wavelengths) > 1

    combined = {"software_version": __version__, "config": config.to_dict(), "channels": []}
    for ci, wavelength in enumerate(config.wavelengths):
        channel, targets = _compose_for_channel(config, scene, ci)
        solver_config = config.solver_config(wavelength, channel.image.shape,
                                             plane_offsets=targets.plane_offsets)
        trace = run_solver(targets, solver_config, rng=np.random.default_rng([config.seed, ci]))

        stack = reconstruct_stack(trace.final, solver_config)
        echo = dict(config.to_dict(), wavelength=wavelength, channel_index=ci,
                    algorithm=config.algorithm)
        report = build_report(stack, targets, solver_config.loss_weights,
                              trace=trace, config_echo=echo)

        phase_grid = export_phase(trace.final, solver_config)
        if config.grating:
            phase_grid = apply_grating(phase_grid)
        channel_dir = out / f"channel_{ci}" if multi else out
        save_stack_and_report(stack, report, channel_dir)
        save_hologram(phase_grid, channel_dir / "hologram.png", metadata={
            "wavelength": wavelength,
            "pixel_pitch": config.pixel_pitch,
            "hop_distance": config.hop_distance,
            "plane_offsets": list(targets.plane_offsets),
            "regime": config.regime,
            "algorithm": config.algorithm,
            "band_limit": solver_config.resolved_band_limit(),
            "grating": config.grating,
            "seed": config.seed,
            "channel_index": ci,
            "n_planes": config.n_planes,
            "mode": config.mode,
        })
        combined["channels"].append({
            "wavelength": wavelength,
            "directory": str(channel_dir),
            "report": report_to_jsonable(report),
        })

    (out / "run_config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    (out / "run_report.json").write_text(json.dumps(combined, indent=2, sort_keys=True))
    return combined


def target_run(config: RunConfig, out_dir=None) -> dict:
    """Write per-plane target and mask previews without solving anything."""
    scene = config.load_scene()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(config.wavelengths) > 1

    summary = {"software_version": __version__, "config": config.to_dict(), "channels": []}
    for ci in range(len(config.wavelengths)):
        _, targets = _compose_for_channel(config, scene, ci)
        channel_dir = out / f"channel_{ci}" if multi else out
        channel_dir.mkdir(parents=True, exist_ok=True)
        peak = max(float(t.max()) for t in targets.targets)
        scale = 255.0 / peak if peak > 0 else 0.0
        for k in range(targets.n_planes):
            pixels = np.floor(targets.targets[k] * scale + 0.5).astype(np.uint8)
            Image.fromarray(pixels, mode="L").save(channel_dir / f"target_{k:02d}.png")
            mask = (targets.masks[k] * 255).astype(np.uint8)
            Image.fromarray(mask, mode="L").save(channel_dir / f"mask_{k:02d}.png")
        summary["channels"].append({
            "directory": str(channel_dir),
            "plane_offsets": list(targets.plane_offsets),
            "mode": targets.mode,
        })
    (out / "targets.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


_GEOMETRY_KEYS = ("wavelength", "pixel_pitch", "hop_distance", "plane_offsets", "regime")


def reconstruct_run(hologram_path, config: RunConfig | None = None, out_dir="out") -> dict:
    """Re-simulate an exported hologram from its PNG and sidecar.

    The sidecar supplies the geometry. When a run config is also given, the
    scene is re-composed so the stack can be scored; otherwise only the
    focal stack images are written.
    """
    hologram, meta = load_hologram(hologram_path)
    missing = [k for k in _GEOMETRY_KEYS if k not in meta]
    if missing:
        raise ConfigurationError(
            f"hologram sidecar lacks {missing}; cannot reconstruct without geometry"
        )
    phase = hologram.phi
    if meta.get("grating"):
        # the grating is its own inverse modulo a full cycle
        phase = apply_grating(phase)
    optical_shape = phase.shape
    solver_config = SolverConfig(
        optical=OpticalConfig(
            wavelength=float(meta["wavelength"]), pixel_pitch=float(meta["pixel_pitch"]),
            height=optical_shape[0], width=optical_shape[1]),
        algorithm=meta.get("algorithm", "sgd_dp"),
        hop_distance=float(meta["hop_distance"]),
        plane_offsets=tuple(float(d) for d in meta["plane_offsets"]),
        regime=meta["regime"],
        band_limit=meta.get("band_limit"),
    )
    stack = reconstruct_stack_from_phase(phase, solver_config)

    out = Path(out_dir)
    if config is not None:
        scene = config.load_scene()
        ci = int(meta.get("channel_index", 0))
        _, targets = _compose_for_channel(config, scene, ci)
        report = build_report(stack, targets, solver_config.loss_weights,
                              config_echo=dict(meta))
        save_stack_and_report(stack, report, out)
        return {"report": report_to_jsonable(report), "directory": str(out)}

    out.mkdir(parents=True, exist_ok=True)
    peak = max(float(i.max()) for i in stack.intensities)
    scale = 255.0 / peak if peak > 0 else 0.0
    for k, plane in enumerate(stack.intensities):
        pixels = np.floor(plane * scale + 0.5).astype(np.uint8)
        Image.fromarray(pixels, mode="L").save(out / f"plane_{k:02d}.png")
    echo = {"sidecar": meta, "plane_offsets": list(stack.plane_offsets)}
    (out / "reconstruct.json").write_text(json.dumps(echo, indent=2, sort_keys=True))
    return {"report": None, "directory": str(out)}


def compare_runs(config: RunConfig, out_dir=None) -> dict:
    """Run every solver against both targeting modes and tabulate the scores."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    combos = [(algorithm, mode)
              for algorithm in ("sgd_dp", "gs", "dp")
              for mode in ("ours", "naive")]

    def one(combo):
        algorithm, mode = combo
        sub = replace(config, algorithm=algorithm, mode=mode,
                      regime=NATURAL_REGIME[algorithm],
                      output_dir=str(out / f"{algorithm}_{mode}"))
        combined = optimize_run(sub)
        return _summary_row(algorithm, mode, combined)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, combos))
    else:
        rows = [one(c) for c in combos]

    table = {"software_version": __version__, "config": config.to_dict(), "rows": rows}
    (out / "comparison.json").write_text(json.dumps(table, indent=2, sort_keys=True))
    return table


def _mean_or_none(values):
    values = [v for v in values if isinstance(v, (int, float)) and math.isfinite(v)]
    return float(np.mean(values)) if values else None


def _summary_row(algorithm: str, mode: str, combined: dict) -> dict:
    per_plane = [plane for channel in combined["channels"]
                 for plane in channel["report"]["planes"]]
    return {
        "algorithm": algorithm,
        "mode": mode,
        "final_objective": _mean_or_none(
            [c["report"]["final_objective"] for c in combined["channels"]]),
        "psnr_in_focus": _mean_or_none([p["psnr_in_focus"] for p in per_plane]),
        "psnr_out_of_focus": _mean_or_none([p["psnr_out_of_focus"] for p in per_plane]),
        "ssim": _mean_or_none([p["ssim"] for p in per_plane]),
    }


def format_comparison(table: dict) -> str:
    headers = ("algorithm", "mode", "final_objective", "psnr_in_focus",
               "psnr_out_of_focus", "ssim")
    lines = ["  ".join(f"{h:>17}" for h in headers)]
    for row in table["rows"]:
        cells = []
        for h in headers:
            v = row[h]
            if isinstance(v, float):
                cells.append(f"{v:>17.4f}")
            else:
                cells.append(f"{str(v):>17}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
