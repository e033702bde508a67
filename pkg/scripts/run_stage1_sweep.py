#!/usr/bin/env python3
"""Run the full sweep: all four settings x all three training configurations.

Desk-scale by default (small qubit counts, few architectures); pass
--full for the native setting domains, which is considerably slower.
"""

import argparse
import sys

from hqnnlab.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true", help="native qubit/depth domains")
    parser.add_argument("--n-architectures", type=int, default=12)
    parser.add_argument("--epochs", type=int, default=15)
    parser.add_argument("--seeds", default="0")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--output-dir", default="runs/stage1_sweep")
    args = parser.parse_args()

    for setting in (1, 2, 3, 4):
        argv = [
            "stage1",
            "--setting", str(setting),
            "--configurations", "1,2,3",
            "--n-architectures", str(args.n_architectures),
            "--epochs", str(args.epochs),
            "--seeds", args.seeds,
            "--jobs", str(args.jobs),
            "--output-dir", f"{args.output_dir}/setting{setting}",
        ]
        if not args.full:
            argv += ["--qubit-choices", "2,4,6", "--depth-choices", "5,10"]
        print(f"== setting {setting} ==", flush=True)
        code = cli_main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
