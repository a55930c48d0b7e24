"""Dual strong-convexity classification across the power family |x|^(1+beta)/(1+beta)."""
import argparse

import numpy as np

from lagmc.diagnostics import dual_convexity_check
from lagmc.grid import GridFunction, GridSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--betas", default="0.2,0.333333333333,0.5,0.8,1.0")
    ap.add_argument("--h", type=float, default=1e-5)
    ap.add_argument("--dual-h", type=float, default=0.01)
    args = ap.parse_args()
    g = GridSpec.centered(1, 1.0, args.h)
    print("beta,expected_flatness,flatness,min_eigenvalue,consistent,verdict")
    for beta in (float(t) for t in args.betas.split(",")):
        q = 1 + beta
        U = GridFunction.from_callable(g, lambda x: np.abs(x[..., 0]) ** q / q)
        rep = dual_convexity_check(U, args.alpha, min(beta, 0.999), dual_h=args.dual_h)
        print(f"{beta:.4f},{1 + 1 / beta:.4f},{rep.flatness:.4f},{rep.min_eigenvalue:.3e},"
              f"{int(rep.consistent)},{rep.verdict}")


if __name__ == "__main__":
    main()
