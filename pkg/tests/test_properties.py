import math
from fractions import Fraction

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from weaksubmod import (
    BoundParams,
    build_oracle,
    exact_expectation,
    factor_general,
    factor_monotone,
    limit_prop_submod_factor,
    marginal,
)
from weaksubmod import zoo
from weaksubmod.core import DummyAugmentedOracle, Subset

unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def bound_params(draw, max_k=8):
    k = draw(st.integers(2, max_k))
    alpha = np.array(draw(st.lists(unit, min_size=k, max_size=k)))
    beta = alpha + np.array(draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    abar = np.array(draw(st.lists(unit, min_size=k, max_size=k)))
    bbar = abar + np.array(draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    return k, BoundParams(alpha, np.minimum(beta, k), abar, np.minimum(bbar, k))


def instance(draw_seed, n):
    rng = np.random.default_rng(draw_seed)
    kind = draw_seed % 4
    spec = [zoo.random_coverage(n, rng), zoo.random_plane_metric(n, rng),
            zoo.random_prop_submod(n, rng, monotone=False),
            {"type": "sum", "parts": [zoo.random_coverage(n, rng), zoo.random_cut(n, rng)]}][kind]
    return build_oracle(spec)


@given(bound_params(), st.data())
def test_general_factor_non_increasing_in_beta_bar(kp, data):
    k, p = kp
    j = data.draw(st.integers(0, k - 1))
    bumped = p.beta_bar.copy()
    bumped[j] = min(float(k), bumped[j] + data.draw(st.floats(0, 1)))
    q = BoundParams(p.alpha, p.beta, p.alpha_bar, bumped)
    assert factor_general(q, k) <= factor_general(p, k) + 1e-15


@given(bound_params(), st.floats(0, 1))
def test_general_factor_non_decreasing_in_alpha0(kp, delta):
    k, p = kp
    alpha = p.alpha.copy()
    alpha[0] = min(alpha[0] + delta, p.beta[0])
    q = BoundParams(alpha, p.beta, p.alpha_bar, p.beta_bar)
    assert factor_general(q, k) >= factor_general(p, k) - 1e-15


@given(bound_params(), st.data())
def test_general_factor_non_decreasing_in_alpha_below_beta_bar(kp, data):
    # alpha_j enters the sum and the product min(1 - beta_bar_{j}/k, 1 - alpha_j/k);
    # while alpha_j <= beta_bar_j the min does not depend on alpha_j
    k, p = kp
    j = data.draw(st.integers(1, k - 1))
    cap = min(p.beta[j], p.beta_bar[j - 1])
    assume(p.alpha[j] <= cap)
    alpha = p.alpha.copy()
    alpha[j] = data.draw(st.floats(float(alpha[j]), float(cap)))
    q = BoundParams(alpha, p.beta, p.alpha_bar, p.beta_bar)
    assert factor_general(q, k) >= factor_general(p, k) - 1e-15


@given(st.lists(unit, min_size=1, max_size=40))
def test_monotone_exact_dominates_exp_form(g):
    exact, expf = factor_monotone(np.array(g), len(g))
    assert exact >= expf - 1e-15


def test_prop_limit_strictly_decreasing_from_three():
    vals = [limit_prop_submod_factor(k) for k in range(3, 2 ** 14 + 1)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.197


def test_prop_limit_rises_from_two_to_three():
    # exact mean of the per-iteration terms: 1/4 at k=2, 49/190 at k=3
    def mean_term(k):
        return sum(Fraction(3 * i * (1 + i), 3 * i * i + 3 * i * k + k * k - 1) for i in range(k)) / k

    assert mean_term(2) == Fraction(1, 4)
    assert mean_term(3) == Fraction(49, 190)
    assert limit_prop_submod_factor(2) < limit_prop_submod_factor(3)
    assert math.isclose(limit_prop_submod_factor(3), 1 - math.exp(-49 / 190), rel_tol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 3))
def test_merged_expectation_matches_all_paths(seed, k):
    f = instance(seed, 5)
    a = exact_expectation(f, k).exact_expected_value
    b = exact_expectation(f, k, merge=False).exact_expected_value
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.data())
def test_marginal_matches_difference_bit_exactly(seed, data):
    f = instance(seed, 7)
    S = data.draw(st.integers(0, 127))
    e = data.draw(st.integers(0, 6))
    assume(not S >> e & 1)
    got = marginal(f, Subset(S, 7), Subset(1 << e, 7))
    assert got == f.evaluate(Subset(S | 1 << e, 7)) - f.evaluate(Subset(S, 7))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.data())
def test_dummies_are_ignored(seed, k, data):
    f = instance(seed, 6)
    aug = DummyAugmentedOracle(f, k)
    S = data.draw(st.integers(0, (1 << aug.capacity) - 1))
    assert aug.evaluate(Subset(S, aug.capacity)) == f.evaluate(Subset(S & 63, 6))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_batch_composition_does_not_change_values(seed):
    f = instance(seed, 8)
    rng = np.random.default_rng(seed)
    masks = rng.integers(0, 256, 40)
    together = f.evaluate_many(masks)
    alone = np.array([f.evaluate(Subset(int(m), 8)) for m in masks])
    assert np.array_equal(together, alone)
