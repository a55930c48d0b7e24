"""Dirichlet solves for the singular family with exact data: error away from the origin against h."""
import argparse

import numpy as np

from lagmc.grid import GridFunction, GridSpec
from lagmc.phase import PhaseSpec
from lagmc.solver import SolveParams, boundary_mask, solve_dirichlet


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--hs", default="0.08,0.04,0.02")
    ap.add_argument("--half-width", type=float, default=0.5)
    ap.add_argument("--exclude", type=float, default=0.1)
    args = ap.parse_args()
    b = args.beta
    print("h,m,iterations,converged,error,error_over_sqrt_h,error_over_h2")
    for h in (float(t) for t in args.hs.split(",")):
        m = int(round(2 * args.half_width / h))
        m += m % 2  # even: the origin sits at a cell centre
        g = GridSpec(2, (-(m - 1) * h / 2,) * 2, h, m)
        r = np.linalg.norm(g.coords(), axis=-1)
        exact = GridFunction(g, r ** (1 + b) / (1 + b))
        init = exact.with_values(np.where(boundary_mask(g), exact.values, 0.0))
        u, rep = solve_dirichlet(exact, init, PhaseSpec.singular(2, b), SolveParams(tol=1e-10))
        far = (r >= args.exclude) & ~boundary_mask(g)
        e = float(np.abs(u.values - exact.values)[far].max())
        print(f"{h},{m},{rep.iterations},{int(rep.converged)},{e:.4e},{e / h**0.5:.4e},{e / h**2:.4e}", flush=True)


if __name__ == "__main__":
    main()
