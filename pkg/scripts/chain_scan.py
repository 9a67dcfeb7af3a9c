"""Chain-recurrent sample points of a period map across several epsilons.

    python scripts/chain_scan.py --f "x*(1-x)" --mode ode --grid 201
"""

import argparse

import numpy as np

from massera.chain import build_chain_graph, chain_recurrent_set
from massera.dynamics import ScalarField
from massera.period import build_period_map


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--f", default="x/2")
    parser.add_argument("--mode", choices=["ode", "map"], default="map")
    parser.add_argument("--tau", type=float, default=1.0)
    parser.add_argument("--range", nargs=2, type=float, default=[0.0, 1.0])
    parser.add_argument("--grid", type=int, default=101)
    parser.add_argument("--eps", type=float, nargs="+", default=[0.005, 0.01, 0.02, 0.05])
    parser.add_argument("--n-min", type=int, default=1)
    parser.add_argument("--n-max", type=int, default=20)
    args = parser.parse_args()

    tau = int(args.tau) if args.mode == "map" else args.tau
    pm = build_period_map(ScalarField.from_strings(args.mode, args.f, tau=tau), tau)
    points = np.linspace(*args.range, args.grid)
    for eps in args.eps:
        g = build_chain_graph(pm, points, eps, args.n_min, args.n_max)
        rec = sorted(chain_recurrent_set(g).recurrent_indices)
        shown = ", ".join(f"{points[i]:.4g}" for i in rec[:12]) + (" ..." if len(rec) > 12 else "")
        print(f"eps={eps:<7g} slack={g.grid_slack:.3g}  {len(rec):4d} recurrent: {shown}")


if __name__ == "__main__":
    main()
