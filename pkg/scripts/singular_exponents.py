"""Hoelder exponent of the singular rotator at the origin for n = 1, 2, 3 and a window sweep."""
import argparse

import numpy as np

from lagmc.diagnostics import holder_exponent_fit
from lagmc.grid import GridSpec
from lagmc.profiles import build_singular_rotator, rotator_profile
from lagmc.verify import SINGULAR_CASES


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="1,2,3")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    print("n,a,window_lo,window_hi,exponent,residual")
    for n in (int(t) for t in args.dims.split(",")):
        a, radius, h, hp, _ = SINGULAR_CASES[n]
        sr = build_singular_rotator(rotator_profile(n, a), GridSpec.centered(n, radius, h), primal_h=hp,
                                    threads=args.threads)
        U = sr.U
        rmax = float(min(-np.max(U.spec.lo), np.min(U.spec.hi)))
        for f0, f1 in ((0.03, 0.3), (0.05, 0.5), (0.1, 0.5), (0.1, 0.8)):
            try:
                fit = holder_exponent_fit(U, np.zeros(n), np.geomspace(f0 * rmax, f1 * rmax, 6))
                print(f"{n},{a},{f0},{f1},{fit.exponent:.5f},{fit.residual:.2e}")
            except ValueError as err:
                print(f"{n},{a},{f0},{f1},nan,{err}")


if __name__ == "__main__":
    main()
