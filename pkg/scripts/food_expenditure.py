"""Posterior summaries for the weekly food-expenditure data, with and
without rows 17 and 20, plus the ratio estimate of mean expenditure.

    python3 scripts/food_expenditure.py [--mu-x 210]
"""

import argparse

from robust_ratio import datasets
from robust_ratio.densities import make_spec
from robust_ratio.model import ModelConfig, Prior
from robust_ratio.posterior import fit
from robust_ratio.ratio import PopulationContext, population_mean_estimate
from robust_ratio.robustness import exclude


def row(label, s):
    (bl, bh), (sl, sh) = s.hpd_beta, s.hpd_sigma
    return (f"{label:8s} beta {s.median_beta:.3f} ({bl:.3f}, {bh:.3f})   "
            f"sigma {s.median_sigma:.3f} ({sl:.3f}, {sh:.3f})")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mu-x", type=float, default=210.0)
    args = ap.parse_args()
    ctx = PopulationContext(args.mu_x)

    full = datasets.table2()
    for title, data in (("all 20 households", full),
                        ("rows 17 and 20 removed", exclude(full, datasets.TABLE2_OUTLIERS))):
        print(f"== {title}: median (95% HPD)")
        for t in ("normal", "student", "lptn"):
            s = fit(ModelConfig(0.5, make_spec(t), Prior.INVERSE_SIGMA), data)
            print(row(t, s))
            if t == "lptn":
                m, (lo, hi) = population_mean_estimate(s, ctx)
                print(f"         mean food expenditure at mu_x={args.mu_x:g}: "
                      f"{m:.2f} ({lo:.2f}, {hi:.2f})")


if __name__ == "__main__":
    main()
