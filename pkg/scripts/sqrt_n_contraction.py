"""Empirical spread of the Batch estimate versus sigma/sqrt(N) for stationary observations.

    python scripts/sqrt_n_contraction.py --reps 10000
"""

import argparse
import math

import numpy as np

from coarse2fine.estimation import EstimatorKind, run_estimator
from coarse2fine.geometry import PlanarPose
from coarse2fine.sensor import Observation


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--reps", type=int, default=10_000)
    parser.add_argument("--sigma-mm", type=float, default=4.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    kind = EstimatorKind.parse("Batch(Prior)")
    sigma = args.sigma_mm / 1000
    ns = (1, 2, 4, 8, 16, 32, 64, 128)
    rng = np.random.default_rng(args.seed)
    est = np.empty((args.reps, len(ns)))
    for i in range(args.reps):
        noise = rng.normal(0.0, sigma, ns[-1])
        stream = [Observation(PlanarPose(x, 0.0, 0.0), [sigma] * 3, 0.0, t) for t, x in enumerate(noise)]
        out = run_estimator(stream, kind)
        est[i] = [out[n - 1].value.x for n in ns]

    print(f"{'N':>5}{'empirical std (mm)':>22}{'sigma/sqrt(N) (mm)':>22}{'ratio':>8}")
    for j, n in enumerate(ns):
        emp = est[:, j].std(ddof=1) * 1000
        ref = args.sigma_mm / math.sqrt(n)
        print(f"{n:>5}{emp:>22.4f}{ref:>22.4f}{emp / ref:>8.3f}")


if __name__ == "__main__":
    main()
