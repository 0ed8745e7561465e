"""Minimum noisy bounds against the coupling J, analytic and (optionally) numeric.

    python scripts/fig2_coupling.py [--points 201] [--numeric 0,0.25,0.5,1]
"""

import argparse
import math

import numpy as np

from metrosim.analytics import sweep_coupling
from metrosim.estimation import ExperimentConfig
from metrosim.model import HamiltonianSpec
from metrosim.optimize import OptimizationTask, minimize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.5)
    ap.add_argument("--jmax", type=float, default=10.0)
    ap.add_argument("--points", type=int, default=201)
    ap.add_argument("--numeric", default="", help="comma-separated J values to also optimize")
    args = ap.parse_args()

    print("J,product_min,entangled_min")
    for j, prod, ent in sweep_coupling(np.linspace(0, args.jmax, args.points), args.gamma):
        print(f"{j:.6g},{prod:.6g},{ent:.6g}")

    if args.numeric:
        print("\nJ,product_numeric,product_analytic")
        rows = {r[0]: r[1] for r in sweep_coupling([float(v) for v in args.numeric.split(",")],
                                                     args.gamma)}
        for j, analytic in rows.items():
            spec = HamiltonianSpec.for_kind("H1", "omega", omega=5 * math.pi, coupling_j=j)
            opt = minimize(OptimizationTask(spec, "product", ExperimentConfig(gamma=args.gamma)))
            print(f"{j:.6g},{opt.best_bound:.6g},{analytic:.6g}")


if __name__ == "__main__":
    main()
