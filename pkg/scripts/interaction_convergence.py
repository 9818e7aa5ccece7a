"""Ratio of the numerical bubble interaction to its leading term as the heights grow.

Compares the exponent pair (n-1, 1), which matches the leading constant, with
(2, 1), which does not.
"""

import argparse
import csv
import sys

from qcurve.bubbles import Bubble, interaction, interaction_leading
from qcurve.sphere import ProblemParams, north_pole, south_pole


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--heights", type=float, nargs="+", default=[5, 10, 20, 40, 80])
    args = ap.parse_args()
    p = ProblemParams(args.m)
    w = csv.writer(sys.stdout)
    w.writerow(["t", "ratio_n_minus_1", "ratio_2"])
    for t in args.heights:
        b1, b2 = Bubble(north_pole(p.n), t, p), Bubble(south_pole(p.n), t, p)
        lead = interaction_leading(b1, b2)
        w.writerow([t, interaction(b1, b2, p.n - 1, 1) / lead, interaction(b1, b2, 2, 1) / lead])


if __name__ == "__main__":
    main()
