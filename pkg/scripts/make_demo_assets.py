#!/usr/bin/env python3
"""Generate a synthetic RGB-D demo scene for the CLI and the web studio.

Writes ref.png, depth.pfm, mask.pgm, timeline.json, and trajectory.json
into the output directory. The scene is a shaded backdrop with a raised
square slab; the mask selects the slab so object-manipulation timelines
have something to move.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from PIL import Image

from trackvid.formats import dumps_canonical, write_depth_pfm, write_mask_pgm


def build_scene(width: int, height: int):
    v, u = np.mgrid[0:height, 0:width].astype(np.float64)
    image = np.stack(
        [
            60 + 120 * u / width,
            60 + 120 * v / height,
            np.full_like(u, 90.0),
        ],
        axis=-1,
    )
    depth = 3.0 + 0.4 * np.sin(2 * np.pi * u / width)

    sy, sx = int(0.3 * height), int(0.35 * width)
    ey, ex = int(0.7 * height), int(0.65 * width)
    mask = np.zeros((height, width), dtype=bool)
    mask[sy:ey, sx:ex] = True
    image[mask] = (220.0, 180.0, 60.0)
    depth[mask] = 2.2  # slab floats in front of the backdrop
    return image.astype(np.uint8), depth, mask


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("demo_assets"))
    ap.add_argument("--width", type=int, default=640)
    ap.add_argument("--height", type=int, default=480)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    image, depth, mask = build_scene(args.width, args.height)

    Image.fromarray(image).save(args.out / "ref.png")
    with open(args.out / "depth.pfm", "wb") as fh:
        write_depth_pfm(depth, fh)
    with open(args.out / "mask.pgm", "wb") as fh:
        write_mask_pgm(mask, fh)

    def yaw(deg: float) -> list:
        half = np.radians(deg) / 2.0
        return [float(np.cos(half)), 0.0, float(np.sin(half)), 0.0]

    timeline = {
        "pivot": "centroid",
        "keyframes": [
            {"frame": 24, "q": yaw(22.5), "t": [0.15, 0.0, 0.0]},
            {"frame": 48, "q": yaw(45.0), "t": [0.3, -0.1, 0.0]},
        ],
    }
    (args.out / "timeline.json").write_text(dumps_canonical(timeline))

    trajectory = {"kind": "spiral", "frames": 49, "radius": 0.25, "turns": 1.0}
    (args.out / "trajectory.json").write_text(dumps_canonical(trajectory))

    print(f"wrote demo scene to {args.out}/")
    print(json.dumps({"width": args.width, "height": args.height,
                      "slab_depth": 2.2, "backdrop_depth": "3.0 +- 0.4"}, indent=2))
    print("try:")
    print(f"  trackvid camera --image {args.out}/ref.png --depth {args.out}/depth.pfm "
          f"--traj right --out out_cam")
    print(f"  trackvid object --image {args.out}/ref.png --depth {args.out}/depth.pfm "
          f"--mask {args.out}/mask.pgm --timeline {args.out}/timeline.json --out out_obj")


if __name__ == "__main__":
    main()
