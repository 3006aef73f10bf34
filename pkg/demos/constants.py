"""Print the closed-form guarantee constants at a large budget."""

import math

from weaksubmod import (
    factor_baselines,
    factor_partial_dummy,
    factor_product_pipeline,
    limit_prop_submod_factor,
)
from weaksubmod.guarantees import card_sum_terms, prop_submod_terms

k = 10 ** 5
print(f"proportionally submodular, randomized greedy: {limit_prop_submod_factor(k):.6f}")
for fam, base in zip(("submodular", "submod_plus_metric", "prop_submod"), factor_baselines()):
    print(f"product pipeline, g {fam:<19} {factor_product_pipeline(fam, k):.6f}   baseline {base:.6f}")
for name, terms in (("cardinality-scaled sum", card_sum_terms), ("prop-submod sum", prop_submod_terms)):
    v = factor_partial_dummy(k, k // 2, terms(k))
    print(f"half-budget dummies, {name:<23} {v:.6f} (x e = {v * math.e:.6f})")
