"""Pohozaev residual of the exact flat bubble and of solver states under quadrature refinement."""

import argparse
import csv
import sys

from qcurve.curvature import k_star
from qcurve.diagnostics import flat_bubble, integral_equation_constant, pohozaev_residual, state_pohozaev
from qcurve.solver import Seed, continue_branch
from qcurve.sphere import ProblemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--R", type=float, default=2.0)
    ap.add_argument("--orders", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    args = ap.parse_args()
    p = ProblemParams(1)
    Kc = integral_equation_constant(p)
    K = k_star(p)
    st = continue_branch(K, [0.4, 0.2, 0.1], Seed.bubble(), L=256).states[-1]
    w = csv.writer(sys.stdout)
    w.writerow(["N", "exact_bubble", "solver_state_tau_0.1"])
    for N in args.orders:
        exact = pohozaev_residual(flat_bubble(1.0), Kc, args.R, p.n - 1.0, p, N).residual
        w.writerow([N, exact, state_pohozaev(st, K, R=min(args.R, 1.0), N=N).residual])


if __name__ == "__main__":
    main()
