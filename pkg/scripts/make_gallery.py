#!/usr/bin/env python3
"""Render an overlay gallery of phantom scenes: one annotated PNG per scene
plus a JSON report, handy for eyeballing what each criterion reacts to.

Usage:
    python3 scripts/make_gallery.py --out-dir runs/gallery
"""

import argparse
import sys
from pathlib import Path

from crlqa import assess, generate_phantom, render_overlay, scene_params, write_report

SCENES = {
    "all_favorable": {},
    "tilted_30deg": {"rotation_deg": 30.0},
    "hyperextended": {"flexion": 0.40},
    "no_palate": {"palate_present": False},
    "low_magnification": {"extent_frac": 0.50},
    "blurred_left_caliper": {"degrade_left": True},
    "face_down": {"face_up": False},
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="runs/gallery")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, overrides in SCENES.items():
        image, mask, truth = generate_phantom(scene_params(**overrides))
        report = assess(image, mask)
        (out / f"{name}.overlay.png").write_bytes(render_overlay(image, mask, report))
        (out / f"{name}.report.json").write_bytes(write_report(report))
        flags = "".join("1" if c else "0" for c in truth.criteria)
        print(f"{name:<22s} truth {flags}  score {report.total_score}/7  "
              f"{'accepted' if report.accepted else 'rejected'}")
    print(f"gallery in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
