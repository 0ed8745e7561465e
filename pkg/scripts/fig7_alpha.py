"""Minimum noisy bound against the entanglement amplitude alpha of a|00> + sqrt(1-a^2)|11>.

    python scripts/fig7_alpha.py --kind H1 --estimated omega [--points 11]
"""

import argparse
import math

import numpy as np

from metrosim.estimation import ExperimentConfig
from metrosim.model import HamiltonianSpec, concurrence
from metrosim.optimize import OptimizationTask, scan_alpha


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", default="H1")
    ap.add_argument("--estimated", default="omega")
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--budget", type=int, default=40_000)
    ap.add_argument("--restarts", type=int, default=5)
    args = ap.parse_args()

    spec = HamiltonianSpec.for_kind(args.kind, args.estimated, omega=5 * math.pi,
                                    coupling_j=0.5, field_h=0.5)
    task = OptimizationTask(spec, "partial", ExperimentConfig(gamma=args.gamma), alpha=0.5,
                            budget=args.budget, restarts=args.restarts)
    alphas = sorted(set(np.linspace(0, 1, args.points).round(6)) | {1 / math.sqrt(2)})
    print("alpha,concurrence,bound_min")
    for a, bound in scan_alpha(task, alphas):
        c = concurrence([a, 0, 0, math.sqrt(1 - a * a)])
        print(f"{a:.6g},{c:.6g},{bound:.6g}")


if __name__ == "__main__":
    main()
