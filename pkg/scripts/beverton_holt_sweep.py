"""Sweep the Beverton-Holt growth rate and initial value.

For each (mu, u0) the asymptotic-periodicity verdict and iterate limit are
compared with the closed-form fixed point of the limiting two-step map,
obtained from the linear recursion for 1/u.

    python scripts/beverton_holt_sweep.py --mu 1.5 2 3 --u0 0.5 5 50
"""

import argparse

from massera.period import AnalysisConfig, full_analysis
from massera.presets import BH_DEFAULT_K, beverton_holt_field


def closed_form_limit(mu: float, k_even: float = 10.0, k_odd: float = 6.0) -> float:
    # v = 1/u obeys v' = v/mu + (1 - 1/mu)/K; two steps give an affine map in v
    a = 1 / mu
    b = 1 - a
    v = (a * b / k_even + b / k_odd) / (1 - a * a)
    return 1 / v


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mu", type=float, nargs="+", default=[1.5, 2.0, 3.0])
    parser.add_argument("--u0", type=float, nargs="+", default=[0.5, 5.0, 50.0])
    parser.add_argument("--horizon", type=int, default=400_000)
    args = parser.parse_args()

    acfg = AnalysisConfig(conv_tol=1e-4)
    print(f"{'mu':>5} {'u0':>6}  {'verdict':<26} {'limit':>18} {'closed form':>18}")
    for mu in args.mu:
        field_ = beverton_holt_field(mu, BH_DEFAULT_K, 2)
        exact = closed_form_limit(mu)
        for u0 in args.u0:
            rep = full_analysis(field_, u0, 2, args.horizon, acfg)
            limit = "-" if rep.iterate_limit is None else f"{rep.iterate_limit:.12f}"
            print(f"{mu:5.2f} {u0:6.2f}  {rep.verdict.value:<26} {limit:>18} {exact:18.12f}")


if __name__ == "__main__":
    main()
