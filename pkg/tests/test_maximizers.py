import json

import numpy as np
import pytest

from weaksubmod import (
    ContractError,
    brute_force_opt,
    build_oracle,
    deterministic_greedy,
    exact_expectation,
    monte_carlo_expectation,
    randomized_greedy,
)
from weaksubmod import zoo
from weaksubmod.maximizers import check_trace, trial_seed

MOD312 = {"type": "modular", "weights": [3, 1, 2]}
CUT2 = {"type": "graph_cut", "weights": [[0, 1], [1, 0]]}
LINE3 = {"type": "metric_diversity", "points": [[0], [1], [3]]}


def f_of(spec):
    return build_oracle(spec)


class TestRandomizedGreedy:
    def test_k1_is_forced(self):
        for seed in range(5):
            tr = randomized_greedy(f_of(MOD312), 1, seed)
            assert tr.final_set == [0] and tr.final_value == 3

    def test_cut_k2(self):
        for seed in range(10):
            tr = randomized_greedy(f_of(CUT2), 2, seed)
            assert tr.iterations[0].candidates == [0, 1]
            assert tr.iterations[0].marginals == [1, 1]
            assert tr.iterations[1].candidates == [2, 3]  # both dummies beat the -1 original
            assert tr.final_value == 1

    def test_modular_k2_candidate_sets(self):
        # after the first pick the remaining top element and element 1 form M_2
        seen = set()
        for seed in range(40):
            tr = randomized_greedy(f_of(MOD312), 2, seed)
            first = tr.iterations[0]
            assert first.candidates == [0, 2]
            second = tr.iterations[1].candidates
            assert second == ([2, 1] if first.chosen == 0 else [0, 1])
            seen.add(tr.final_value)
        assert seen == {3.0, 4.0, 5.0}

    def test_initial_set(self):
        f = f_of(zoo.random_coverage(8, np.random.default_rng(0)))
        init = deterministic_greedy(f, 2).set
        tr = randomized_greedy(f, 5, seed=3, initial=init)
        assert len(tr.iterations) == 3
        assert set(init) <= set(tr.final_set)

    def test_initial_contract(self):
        f = f_of(MOD312)
        with pytest.raises(ContractError):
            randomized_greedy(f, 2, initial=[0, 1])
        with pytest.raises(ContractError):
            randomized_greedy(f, 2, initial=[4])
        with pytest.raises(ContractError):
            randomized_greedy(f, 0)

    def test_determinism(self):
        f = f_of(zoo.random_prop_submod(7, np.random.default_rng(1), monotone=False))
        a = json.dumps(randomized_greedy(f, 3, 42).to_dict(), sort_keys=True)
        b = json.dumps(randomized_greedy(f, 3, 42).to_dict(), sort_keys=True)
        assert a == b

    def test_query_bound(self):
        f = f_of(zoo.random_cut(9, np.random.default_rng(2)))
        for k in (1, 3, 5):
            tr = randomized_greedy(f, k, 7)
            assert tr.queries <= 2 * (9 + 2 * k) * k

    def test_trace_checks(self):
        spec = {"type": "sum", "parts": [zoo.random_coverage(7, np.random.default_rng(3)),
                                         zoo.random_cut(7, np.random.default_rng(4))]}
        f = f_of(spec)
        opt = brute_force_opt(f, 3).set
        for seed in range(20):
            assert check_trace(f, randomized_greedy(f, 3, seed), opt) == []

    def test_trace_check_catches_tampering(self):
        f = f_of(MOD312)
        tr = randomized_greedy(f, 2, 0)
        tr.iterations[1].chosen = 9
        assert check_trace(f, tr)


class TestBaselines:
    def test_deterministic_greedy(self):
        assert deterministic_greedy(f_of(MOD312), 2).set == [0, 2]
        assert deterministic_greedy(f_of(MOD312), 2).value == 5
        r = deterministic_greedy(f_of(CUT2), 2)
        assert r.set == [0] and r.value == 1

    def test_nested_coverage_picks_largest(self):
        f = f_of({"type": "coverage", "covers": [[0], [0, 1], [0, 1, 2]]})
        assert deterministic_greedy(f, 1).set == [2]

    def test_brute_force(self):
        assert brute_force_opt(f_of(MOD312), 2).value == 5
        r = brute_force_opt(f_of(CUT2), 2)
        assert r.value == 1 and r.set == [0]
        r = brute_force_opt(f_of(LINE3), 2)
        assert r.set == [0, 2] and r.value == 3

    def test_brute_force_value_is_reevaluated(self):
        f = f_of(zoo.random_plane_metric(7, np.random.default_rng(5)))
        r = brute_force_opt(f, 3)
        assert f.evaluate(r.set) == r.value and len(r.set) <= 3


class TestExactExpectation:
    def test_modular_two(self):
        # M_2 holds the remaining original and the first dummy, so half the time a dummy is drawn:
        # 1/2 (2 + 1/2) + 1/2 (1 + 1) = 2.25
        res = exact_expectation(f_of({"type": "modular", "weights": [2, 1]}), 2)
        assert res.exact_expected_value == 2.25

    def test_modular_312(self):
        # paths: pick 0 then {2,1}, or pick 2 then {0,1}: (5+4)/4 + (5+3)/4
        res = exact_expectation(f_of(MOD312), 2)
        assert res.exact_expected_value == pytest.approx(4.25)
        assert res.num_leaves == 4

    def test_cut_with_reference(self):
        res = exact_expectation(f_of(CUT2), 2, reference=[0])
        assert res.exact_expected_value == 1
        assert res.num_leaves == 4
        # S_1 is {0} or {1}: f({0}) = 1, f({0,1}) = 0
        assert res.expected_with_reference[1] == pytest.approx(0.5)

    def test_k1_single_leaf(self):
        f = f_of(zoo.random_coverage(6, np.random.default_rng(6)))
        res = exact_expectation(f, 1)
        assert res.num_leaves == 1
        assert res.exact_expected_value == deterministic_greedy(f, 1).value

    @pytest.mark.parametrize("k", [2, 3])
    def test_merge_is_exact(self, k):
        f = f_of(zoo.random_prop_submod(6, np.random.default_rng(7), monotone=False))
        a = exact_expectation(f, k).exact_expected_value
        b = exact_expectation(f, k, merge=False).exact_expected_value
        assert a == pytest.approx(b, rel=1e-12)

    def test_k_guard(self):
        with pytest.raises(ContractError):
            exact_expectation(f_of(MOD312), 7)


class TestMonteCarlo:
    def test_deterministic_instance(self):
        r = monte_carlo_expectation(f_of(MOD312), 1, 20)
        assert r.stderr == 0 and r.mean == 3

    def test_cut(self):
        r = monte_carlo_expectation(f_of(CUT2), 2, 1000, seed=3)
        assert r.mean == 1 and r.stderr == 0

    def test_close_to_exact(self):
        f = f_of(zoo.random_prop_submod(7, np.random.default_rng(8), monotone=True))
        exact = exact_expectation(f, 3).exact_expected_value
        mc = monte_carlo_expectation(f, 3, 400, seed=1)
        assert abs(mc.mean - exact) <= 4 * mc.stderr + 1e-12

    def test_workers_do_not_change_results(self):
        f = f_of(zoo.random_cut(6, np.random.default_rng(9)))
        one = monte_carlo_expectation(f, 3, 50, seed=5, workers=1)
        many = monte_carlo_expectation(f, 3, 50, seed=5, workers=4)
        assert one.values == many.values

    def test_trial_seeds_are_distinct(self):
        seeds = {trial_seed(0, t) for t in range(1000)}
        assert len(seeds) == 1000
        assert trial_seed(0, 1) != trial_seed(1, 0)
