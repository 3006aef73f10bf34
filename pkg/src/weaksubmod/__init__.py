"""Randomized greedy maximization of weakly submodular set functions, with exhaustive self-checks."""

from .core import (
    CallableFunction,
    CapacityError,
    ContractError,
    DummyAugmentedOracle,
    GroundSet,
    QueryCounter,
    SetFunction,
    Subset,
    augment_with_dummies,
    enumerate_subsets,
    marginal,
)
from .guarantees import (
    BoundParams,
    GammaProfile,
    claim_warm_start_ratio,
    factor_baselines,
    factor_general,
    factor_monotone,
    factor_nonmonotone_profile,
    factor_partial_dummy,
    factor_product_pipeline,
    factor_pseudo,
    factor_pseudo_asymptotic,
    factor_weak,
    factor_weak_asymptotic,
    limit_prop_submod_factor,
)
from .maximizers import (
    GreedyTrace,
    RunResult,
    brute_force_opt,
    deterministic_greedy,
    exact_expectation,
    monte_carlo_expectation,
    randomized_greedy,
)
from .ratios import (
    PairRatio,
    RatioReport,
    bound_card_divided,
    bound_card_scaled,
    bound_metric,
    bound_product,
    bound_prop_submod,
    fit_bound_params,
    fit_pseudo_gamma,
    fit_weak_gamma,
    gamma_profile,
    local_ratio,
    verify_example_bounds,
    verify_lemmas,
)
from .zoo import (
    SpecError,
    build_oracle,
    check_monotone,
    check_proportionally_submodular,
    check_submodular,
)

__version__ = "0.1.0"
