"""Transport equation: solution size as sigma moves away from the imaginary axis.

    python scripts/transport.py --sigmas -2 -1 1 2 --modes 2
"""
import argparse
import csv
from pathlib import Path

from neutralpap.equations import TransportModel, build_transport, lipschitz_for_theta
from neutralpap.errors import NotHyperbolic
from neutralpap.mild import picard_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigmas", type=float, nargs="+", default=[-2.0, -1.0, 0.0, 1.0, 2.0])
    ap.add_argument("--modes", type=int, default=2)
    ap.add_argument("--delay", type=float, default=0.2)
    ap.add_argument("--theta", type=float, default=0.5)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--out", type=Path, default=Path("runs/transport"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    for sigma in args.sigmas:
        try:
            K = lipschitz_for_theta(TransportModel(sigma, args.modes), 0.5, 0.75, args.theta)
        except NotHyperbolic as exc:
            print(f"sigma={sigma:<5g} rejected: {exc}")
            continue
        problem = build_transport(sigma, args.modes, K=K, p=args.delay)
        u, rep = picard_solve(problem, tol=args.tol)
        size = float(problem.alpha_norm(u.values).max())
        rows.append([sigma, K, rep.iterations, rep.final_residual, size])
        print(f"sigma={sigma:<5g} K={K:.4g} iters={rep.iterations} residual={rep.final_residual:.2e} "
              f"sup alpha-norm={size:.4f}")

    with open(args.out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "K", "iterations", "residual", "sup_alpha_norm"])
        w.writerows([[f"{v:.12g}" for v in r] for r in rows])


if __name__ == "__main__":
    main()
