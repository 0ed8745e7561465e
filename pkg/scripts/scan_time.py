"""Optimal product and maximally entangled bounds at pinned evolution times.

    python scripts/scan_time.py --kind H1 --estimated omega --gamma 0.5 --grid 0.1:2:20
"""

import argparse
import sys

from metrosim import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", default="H1")
    ap.add_argument("--estimated", default="omega")
    ap.add_argument("--gamma", default="0.5")
    ap.add_argument("--grid", default="0.1:2:20")
    ap.add_argument("--budget", default="40000")
    ap.add_argument("--out")
    args = ap.parse_args()
    argv = ["scan-time", "--kind", args.kind, "--estimated", args.estimated, "--gamma",
            args.gamma, "--grid", args.grid, "--budget", args.budget]
    if args.out:
        argv += ["--out", args.out]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
