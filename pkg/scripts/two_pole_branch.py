"""Two symmetric peaks: K = 1 + x_6^8 with a two-bubble seed.

Both poles are maxima with Laplacian -40, so the 2x2 interaction system has
equal heights. Needs a fine truncation; expect ~30 s per run at L = 512.
"""

import argparse
from pathlib import Path

from qcurve.cli import dumps_json
from qcurve.curvature import CurvatureModel
from qcurve.diagnostics import mu_lambda_check
from qcurve.solver import Seed, continue_branch
from qcurve.sphere import ProblemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/two_pole"))
    ap.add_argument("--L", type=int, default=512)
    ap.add_argument("--taus", type=float, nargs="+", default=[0.04, 0.02, 0.01])
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    p = ProblemParams(1)
    K = CurvatureModel.zonal(p, [1.0] + [0.0] * 7 + [1.0])
    br = continue_branch(K, args.taus, Seed.two_bubble(), L=args.L)
    (args.out / "branch.csv").write_text(br.to_csv())
    rep = mu_lambda_check(br, K, (1, -1))
    out = {
        "estimates": rep.estimates,
        "targets": rep.targets,
        "lambdas": rep.lambdas,
        "height_ratios": rep.height_ratios,
        "system_residual": rep.system_residual,
        "stopped": br.stopped,
    }
    (args.out / "report.json").write_text(dumps_json(out))
    print(f"mu estimates {rep.estimates}, targets {rep.targets}")
    print(f"height ratio {rep.height_ratios[-1]:.12f}, system residual {rep.system_residual:.2e}")


if __name__ == "__main__":
    main()
