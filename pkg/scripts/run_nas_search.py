#!/usr/bin/env python3
"""Run the multi-objective search for both trainability scopes.

Defaults match the reference budget: population 12 over 8 generations
(108 evaluations per scope).  Point --images/--labels at IDX files; use
scripts/make_sample_images.py for a quick synthetic stand-in, or pass
--image-size 8 to downscale larger images for a faster run.
"""

import argparse
import sys

from hqnnlab.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--images", required=True)
    parser.add_argument("--labels", required=True)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--per-class", type=int, default=400)
    parser.add_argument("--image-size", type=int, default=None)
    parser.add_argument("--population", type=int, default=12)
    parser.add_argument("--generations", type=int, default=8)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--output-dir", default="runs/nas_search")
    args = parser.parse_args()

    for scope in ("full", "quantum_only"):
        argv = [
            "nas",
            "--scope", scope,
            "--images", args.images,
            "--labels", args.labels,
            "--classes", str(args.classes),
            "--per-class", str(args.per_class),
            "--population", str(args.population),
            "--generations", str(args.generations),
            "--epochs", str(args.epochs),
            "--seed", str(args.seed),
            "--jobs", str(args.jobs),
            "--output-dir", f"{args.output_dir}/{scope}",
        ]
        if args.image_size:
            argv += ["--image-size", str(args.image_size)]
        print(f"== scope {scope} ==", flush=True)
        code = cli_main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
