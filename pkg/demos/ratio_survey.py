"""Survey the fitted ratios across instance families.

For each family, fit both global ratios on a few seeded instances and print
the smallest value seen. Infeasible fits are shown as '-'.
"""

import numpy as np

from weaksubmod import build_oracle, ratios, zoo

N, SEEDS = 7, 5

families = {
    "coverage": lambda r: zoo.random_coverage(N, r),
    "line metric": lambda r: zoo.random_line_metric(N, r),
    "cut": lambda r: zoo.random_cut(N, r),
    "coverage + scaled cut": lambda r: {"type": "sum", "parts": [
        zoo.random_coverage(N, r), {"type": "card_scaled", "inner": zoo.random_cut(N, r)}]},
    "prop-submod (monotone)": lambda r: zoo.random_prop_submod(N, r, monotone=True),
    "coverage x coverage": lambda r: {"type": "product", "factors": [
        zoo.random_coverage(N, r), zoo.random_coverage(N, r)]},
}


def fmt(v):
    return "-" if v is None else f"{v:.4f}"


print(f"{'family':<24}{'weak':>10}{'pseudo':>10}")
for name, make in families.items():
    weak, pseudo = [], []
    for s in range(SEEDS):
        rep = ratios.ratio_report(build_oracle(make(np.random.default_rng([N, s]))))
        weak.append(rep.fitted_weak_gamma)
        pseudo.append(rep.fitted_pseudo_gamma)
    lo = lambda xs: None if None in xs else min(xs)  # noqa: E731
    print(f"{name:<24}{fmt(lo(weak)):>10}{fmt(lo(pseudo)):>10}")
