"""Rotated spectra of random convex potentials: angle shift and Hessian bounds against h."""
import argparse
import csv
import sys

import numpy as np

from lagmc.convex import lewy_yuan_rotate, rotated_hessians
from lagmc.grid import GridFunction, GridSpec, jacobi_eigh
from lagmc.verify import random_spd, rotation_angle_error


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    out = csv.writer(sys.stdout)
    out.writerow(["kind", "n", "h", "trial", "value_over_h"])
    for n, radius in ((1, 0.5), (2, 0.3)):
        for h in (0.04, 0.02, 0.01):
            for t in range(args.trials):
                Q = random_spd(rng, n)
                u = GridFunction.from_callable(GridSpec.centered(n, radius, h),
                                               lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, Q, x))
                out.writerow(["angle", n, h, t, rotation_angle_error(u, Q) / h])
                x0 = rng.uniform(-0.2, 0.2, n)
                beta = rng.uniform(0.2, 0.9)
                v = GridFunction(u.spec, u.values + np.linalg.norm(u.spec.coords() - x0, axis=-1) ** (1 + beta) / (1 + beta))
                _, J = rotated_hessians(lewy_yuan_rotate(v))
                lam = jacobi_eigh(J).values
                out.writerow(["bound_excess", n, h, t, max(lam.max() - 1, -1 - lam.min()) / h])


if __name__ == "__main__":
    main()
