"""Certify the dichotomy constants of the heat operator over a range of sigma.

Prints the worst LHS/RHS ratio of each inequality; every ratio must stay <= 1.
"""
import argparse
import math

import numpy as np

from neutralpap.equations import HeatModel
from neutralpap.spectral import estimate_constants, verify_estimates, verify_interpolation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=16)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=0.75)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[1.0, 5.0, 20.0, 50.0, 100.0])
    args = ap.parse_args()

    names = None
    for sigma in args.sigmas:
        if np.any(np.isclose(sigma, (np.arange(1, args.modes + 1) * math.pi) ** 2)):
            print(f"sigma={sigma:g}: resonant, skipped")
            continue
        op = HeatModel(sigma, args.modes).operator()
        c = estimate_constants(op, args.alpha, args.beta)
        rep = verify_estimates(op, c, args.alpha, args.beta)
        rep.rows += verify_interpolation(op, args.alpha, args.beta, c.k_alpha).rows
        if names is None:
            names = [r.name for r in rep.rows]
            print("sigma    n_unstable  " + "  ".join(f"{n:>10s}" for n in names))
        ratios = "  ".join(f"{r.max_ratio:10.6f}" for r in rep.rows)
        print(f"{sigma:<8g} {int(op.unstable.sum()):10d}  {ratios}  {'ok' if rep.passed else 'FAILED'}")


if __name__ == "__main__":
    main()
