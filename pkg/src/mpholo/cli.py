"""Command line front end.

Subcommands: optimize, target, reconstruct, compare, selftest. Every flag
mirrors a run config field and overrides the value loaded from --config.
Set MPHOLO_THREADS to run the independent legs of `compare` in parallel.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import MpholoError
from .io import RunConfig
from .pipeline import (compare_runs, format_comparison, optimize_run,
                       reconstruct_run, target_run)
from .selftest import run_selftest

_OVERRIDE_FIELDS = (
    "image", "depth", "builtin", "builtin_height", "builtin_width", "wavelengths",
    "pixel_pitch", "n_planes", "w0", "w1", "w2", "sigma0", "mode", "algorithm",
    "iterations", "learning_rate", "hop_distance", "plane_spacing", "regime",
    "m0", "m1", "phase_init", "initial_offset", "step_per_plane", "output_dir",
    "seed", "grating",
)


def _wavelength_list(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad wavelength list {text!r}") from None


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run configuration")
    group.add_argument("--config", metavar="JSON", help="run config file; flags override it")
    group.add_argument("--image", help="8-bit grayscale or RGB PNG")
    group.add_argument("--depth", help="8-bit grayscale depth PNG, 0 = nearest")
    group.add_argument("--builtin", help="procedural scene name (three-rectangles)")
    group.add_argument("--builtin-height", type=int, dest="builtin_height")
    group.add_argument("--builtin-width", type=int, dest="builtin_width")
    group.add_argument("--wavelengths", type=_wavelength_list,
                       help="comma separated wavelengths in meters")
    group.add_argument("--pixel-pitch", type=float, dest="pixel_pitch")
    group.add_argument("--n-planes", type=int, dest="n_planes")
    group.add_argument("--w0", type=float)
    group.add_argument("--w1", type=float)
    group.add_argument("--w2", type=float)
    group.add_argument("--sigma0", type=float, help="defocus blur base, pixels per plane step")
    group.add_argument("--mode", choices=("ours", "naive"))
    group.add_argument("--algorithm", choices=("sgd_dp", "gs", "dp"))
    group.add_argument("--iterations", type=int)
    group.add_argument("--learning-rate", type=float, dest="learning_rate")
    group.add_argument("--hop-distance", type=float, dest="hop_distance")
    group.add_argument("--plane-spacing", type=float, dest="plane_spacing")
    group.add_argument("--regime", choices=("near", "far"))
    group.add_argument("--m0", type=float)
    group.add_argument("--m1", type=float)
    group.add_argument("--phase-init", choices=("random", "zeros"), dest="phase_init")
    group.add_argument("--initial-offset", type=float, dest="initial_offset",
                       help="starting value of the learned checkerboard offset")
    group.add_argument("--step-per-plane", action="store_const", const=True,
                       dest="step_per_plane")
    group.add_argument("--band-limit", choices=("on", "off", "auto"), dest="band_limit")
    group.add_argument("--output-dir", "-o", dest="output_dir")
    group.add_argument("--seed", type=int)
    group.add_argument("--grating", action="store_const", const=True)


def _build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {name: getattr(args, name) for name in _OVERRIDE_FIELDS
                 if getattr(args, name, None) is not None}
    config = config.with_overrides(**overrides)
    band = getattr(args, "band_limit", None)
    if band is not None:
        # Tri-state field, so "auto" must write None explicitly rather than
        # go through with_overrides, which treats None as "keep".
        resolved = {"on": True, "off": False, "auto": None}[band]
        config = RunConfig.from_dict({**config.to_dict(), "band_limit": resolved})
    return config


def _cmd_optimize(args) -> int:
    config = _build_config(args)
    combined = optimize_run(config)
    for channel in combined["channels"]:
        report = channel["report"]
        in_focus = [p["psnr_in_focus"] for p in report["planes"]]
        print(f"wavelength {channel['wavelength'] * 1e9:.1f} nm: "
              f"final objective {report['final_objective']:.6g}, "
              f"in-focus PSNR per plane {in_focus}")
    print(f"wrote {config.output_dir}/run_report.json")
    return 0


def _cmd_target(args) -> int:
    config = _build_config(args)
    summary = target_run(config)
    for channel in summary["channels"]:
        print(f"targets in {channel['directory']} at offsets {channel['plane_offsets']}")
    return 0


def _cmd_reconstruct(args) -> int:
    config = _build_config(args) if args.config else None
    out = args.output_dir or "out"
    result = reconstruct_run(args.hologram, config=config, out_dir=out)
    print(f"focal stack written to {result['directory']}")
    if result["report"] is not None:
        print(f"final objective {result['report']['final_objective']:.6g}")
    return 0


def _cmd_compare(args) -> int:
    config = _build_config(args)
    table = compare_runs(config)
    print(format_comparison(table))
    print(f"wrote {config.output_dir}/comparison.json")
    return 0


def _cmd_selftest(args) -> int:
    failures = run_selftest(fast=args.fast)
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mpholo",
        description="Phase-only multiplane holograms with realistic defocus blur.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve a hologram and save stack plus report")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("target", help="write per-plane target and mask previews")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_target)

    p = sub.add_parser("reconstruct", help="re-simulate an exported hologram PNG")
    p.add_argument("hologram", help="hologram PNG with its JSON sidecar")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("compare", help="run all solvers against both targeting modes")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--fast", action="store_true", help="smaller grids, fewer samples")
    p.set_defaults(func=_cmd_selftest)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MpholoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
