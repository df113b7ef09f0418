"""Send y11 of the disposable-income data to large values and watch the
full-data posterior approach the posterior without that row.

    python3 scripts/convergence.py [--model lptn] [--max-exp 10]
"""

import argparse
import os

import numpy as np

from robust_ratio import datasets
from robust_ratio.densities import make_spec
from robust_ratio.model import ModelConfig, Prior
from robust_ratio.posterior import map_estimate
from robust_ratio.robustness import convergence_trace, exclude, likelihood_profile_gap


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="lptn", choices=["normal", "student", "lptn"])
    ap.add_argument("--max-exp", type=int, default=10)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    config = ModelConfig(0.5, make_spec(args.model), Prior.FLAT)
    data = datasets.table1()
    idx = [datasets.TABLE1_FREE_INDEX]
    omegas = 10.0 ** np.arange(2, args.max_exp + 1)
    trace = convergence_trace(config, data, idx, [1], omegas, workers=args.workers)

    ref = map_estimate(config, exclude(data, idx))
    box = (ref.beta - 3, ref.beta + 3, ref.sigma / 2, ref.sigma * 2)
    print("omega,l1,log_marginal_ratio,loglik_gap")
    for w, l1, lr in zip(trace.omegas, trace.l1, trace.log_marginal_ratio):
        gap = likelihood_profile_gap(config, data, idx, [1], w, box, ref)
        print(f"{w:.0e},{l1:.5f},{lr:.5f},{gap:.5f}")


if __name__ == "__main__":
    main()
