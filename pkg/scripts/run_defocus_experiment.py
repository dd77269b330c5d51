#!/usr/bin/env python3
"""Headline experiment: composite defocus targets versus naive focus-only ones.

Solves the built-in three-plane scene twice with the gradient solver, once
per targeting mode, then prints the per-plane PSNR table. The out-of-focus
rows are scored against the physically expected defocus stack in both runs,
so the margin column is the realism gain from modeling blur in the loss.

Uses the bright deterministic launch point (zero phase, zero offset,
per-plane stepping); with the stock learning rate the fixed iteration
budget is too small to climb out of a dark random start.
"""

import argparse
import json
from pathlib import Path

from mpholo.io import RunConfig
from mpholo.pipeline import optimize_run


def solve(mode: str, out: Path, args) -> list[dict]:
    config = RunConfig(builtin_height=args.size, builtin_width=args.size,
                       mode=mode, iterations=args.iterations,
                       phase_init="zeros", initial_offset=0.0,
                       step_per_plane=True, seed=args.seed)
    summary = optimize_run(config, out / mode)
    return summary["channels"][0]["report"]["planes"]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out/defocus_experiment"))
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--iterations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    planes = {mode: solve(mode, args.out, args) for mode in ("ours", "naive")}

    rows = []
    print(f"{'plane':>5s} {'offset (mm)':>12s} {'in-focus ours':>14s} "
          f"{'out ours':>9s} {'out naive':>10s} {'margin (dB)':>12s}")
    for k, (ours, naive) in enumerate(zip(planes["ours"], planes["naive"])):
        margin = ours["psnr_out_of_focus"] - naive["psnr_out_of_focus"]
        rows.append({"plane": k, "offset": ours["plane_offset"],
                     "psnr_in_focus_ours": ours["psnr_in_focus"],
                     "psnr_out_of_focus_ours": ours["psnr_out_of_focus"],
                     "psnr_out_of_focus_naive": naive["psnr_out_of_focus"],
                     "margin_db": margin})
        print(f"{k:5d} {ours['plane_offset'] * 1e3:12.1f} "
              f"{ours['psnr_in_focus']:14.2f} {ours['psnr_out_of_focus']:9.2f} "
              f"{naive['psnr_out_of_focus']:10.2f} {margin:12.2f}")

    (args.out / "comparison.json").write_text(json.dumps(rows, indent=2))
    print(f"\nfocal stacks and reports under {args.out}/ours and {args.out}/naive")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
