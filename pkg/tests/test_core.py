import numpy as np
import pytest

from weaksubmod import (
    CallableFunction,
    CapacityError,
    ContractError,
    GroundSet,
    Subset,
    augment_with_dummies,
    enumerate_subsets,
    marginal,
)
from weaksubmod.core import QueryCounter, close_enough, masks_in_order, order_rank
from weaksubmod.zoo import GraphCut, Modular


def cut2():
    return GraphCut([[0, 1], [1, 0]])


class TestGroundSetAndSubset:
    def test_dummy_ids_follow_originals(self):
        g = GroundSet(3, 4)
        assert g.n_total == 7
        assert [g.is_dummy(e) for e in range(7)] == [False] * 3 + [True] * 4

    def test_rejects_empty_ground_set(self):
        with pytest.raises(ContractError):
            GroundSet(0)
        with pytest.raises(ContractError):
            GroundSet(2, -1)

    def test_set_algebra(self):
        a, b = Subset.of([0, 2], 4), Subset.of([2, 3], 4)
        assert list(a | b) == [0, 2, 3]
        assert list(a & b) == [2]
        assert list(a - b) == [0]
        assert len(a | b) == 3
        assert 3 in b and 1 not in b

    def test_capacity_enforced(self):
        with pytest.raises(ContractError):
            Subset.of([5], 4)
        with pytest.raises(ContractError):
            Subset.of([0], 4) | Subset.of([0], 5)


class TestMarginal:
    def test_modular(self):
        assert marginal(Modular([3, 1, 2]), [0], [2]) == 2

    def test_empty_b_is_free(self):
        f = Modular([3, 1, 2])
        before = f.queries
        assert marginal(f, [0, 1], []) == 0
        assert f.queries == before

    def test_two_queries(self):
        f = Modular([3, 1, 2])
        before = f.queries
        marginal(f, [0], [1, 2])
        assert f.queries - before == 2

    def test_cut_is_negative(self):
        # cut values on two nodes: 0, 1, 1, 0
        f = cut2()
        assert [f.evaluate(Subset(m, 2)) for m in range(4)] == [0, 1, 1, 0]
        assert marginal(f, [0], [1]) == -1

    def test_overlap_rejected(self):
        with pytest.raises(ContractError):
            marginal(Modular([1, 1]), [0], [0, 1])


class TestDummies:
    def test_layout(self):
        aug = augment_with_dummies(Modular([1, 1, 1]), 2)
        assert aug.capacity == 7
        assert [aug.is_dummy(e) for e in range(7)] == [False] * 3 + [True] * 4

    def test_dummies_contribute_nothing(self):
        aug = augment_with_dummies(Modular([1, 1, 1]), 2)
        assert aug.evaluate(Subset.of([0, 4], 7)) == 1
        assert aug.evaluate(Subset.of([3, 6], 7)) == 0

    def test_invalid_budget(self):
        with pytest.raises(ContractError):
            augment_with_dummies(Modular([1]), 0)

    def test_matches_inner_on_random_sets(self):
        rng = np.random.default_rng(0)
        W = np.triu(rng.uniform(0, 1, (5, 5)), 1)
        f = GraphCut(W + W.T)
        aug = augment_with_dummies(f, 3)
        for m in rng.integers(0, 1 << aug.capacity, 50):
            assert aug.evaluate(Subset(int(m), aug.capacity)) == f.evaluate(Subset(int(m) & 31, 5))


class TestEnumeration:
    def test_small_cases(self):
        assert [list(s) for s in enumerate_subsets(3, 1)] == [[], [0], [1], [2]]
        assert len(list(enumerate_subsets(3, 3))) == 8
        assert len(list(enumerate_subsets(4, 2))) == 11

    def test_order_is_size_then_member_tuple(self):
        masks = masks_in_order(4)
        members = [tuple(e for e in range(4) if int(m) >> e & 1) for m in masks]
        assert members == sorted(members, key=lambda t: (len(t), t))

    def test_rank_inverts_order(self):
        masks = masks_in_order(5)
        rank = order_rank(5)
        assert np.array_equal(rank[masks], np.arange(32))

    def test_guard(self):
        with pytest.raises(CapacityError, match="sampled"):
            list(enumerate_subsets(25, 1))


class TestOracleContract:
    def test_queries_count(self):
        f = Modular([1, 2])
        f.evaluate([0])
        f.evaluate_many(np.array([1, 2, 3]))
        assert f.queries == 4

    def test_counter(self):
        c = QueryCounter()
        c.add(3)
        assert c.count == 3
        c.reset()
        assert c.count == 0

    def test_callable_normalization(self):
        f = CallableFunction(lambda S: len(S) ** 2, 3)
        assert f.evaluate([0, 1]) == 4
        with pytest.raises(ContractError):
            CallableFunction(lambda S: len(S) + 1, 3).check_normalized()

    def test_deterministic(self):
        f = cut2()
        assert f.evaluate([0]) == f.evaluate([0])

    def test_close_enough(self):
        assert close_enough(1.0, 1.0 + 1e-10)
        assert not close_enough(1.0, 1.0 + 1e-6)
        assert close_enough(0.0, 1e-13)
