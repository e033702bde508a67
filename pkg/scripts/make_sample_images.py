#!/usr/bin/env python3
"""Synthesize a small IDX image/label pair for demo and smoke runs."""

import argparse
from pathlib import Path

from hqnnlab.data import synthesize_images, write_idx


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--classes", type=int, default=4)
    parser.add_argument("--per-class", type=int, default=40)
    parser.add_argument("--size", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="data")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images, labels = synthesize_images(args.classes, args.per_class, args.size, args.seed)
    write_idx(images, labels, out / "images.idx", out / "labels.idx")
    print(f"wrote {len(labels)} {args.size}x{args.size} images to {out}/images.idx, {out}/labels.idx")


if __name__ == "__main__":
    main()
