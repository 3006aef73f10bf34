import json

import numpy as np
import pytest

import reference as ref
from weaksubmod import SpecError, build_oracle, check_monotone, check_proportionally_submodular, check_submodular
from weaksubmod.core import CapacityError, Subset, masks_in_order
from weaksubmod.zoo import (
    check_triangle_inequality,
    load_spec,
    random_coverage,
    random_cut,
    random_line_metric,
    random_modular,
    random_plane_metric,
    random_prop_submod,
    random_table,
)

LINE3 = {"type": "metric_diversity", "points": [[0], [1], [3]]}
CUT2 = {"type": "graph_cut", "weights": [[0, 1], [1, 0]]}
# Value 6 on the full set makes S={0,1}, T={0,2} the first violating pair.
PLANTED_PROP = {"type": "table", "n": 3, "values": [0, 1, 1, 2, 1, 2, 2, 6]}


def values_of(f):
    return [f.evaluate(Subset(m, f.n)) for m in range(1 << f.n)]


class TestBuild:
    def test_metric_line(self):
        f = build_oracle(LINE3)
        assert f.evaluate([0, 1, 2]) == 6

    def test_metric_matrix_and_csv(self, tmp_path):
        D = [[0, 1, 3], [1, 0, 2], [3, 2, 0]]
        (tmp_path / "d.csv").write_text("\n".join(",".join(map(str, r)) for r in D))
        a = build_oracle({"type": "metric_diversity", "matrix": D})
        b = build_oracle({"type": "metric_diversity", "matrix_csv": "d.csv"}, tmp_path)
        assert values_of(a) == values_of(b) == values_of(build_oracle(LINE3))

    def test_card_scaled(self):
        f = build_oracle({"type": "card_scaled", "inner": {"type": "modular", "weights": [1, 1]}})
        assert f.evaluate([0, 1]) == 4

    def test_card_divided_zero_at_empty(self):
        f = build_oracle({"type": "card_divided", "inner": {"type": "modular", "weights": [2, 4]}})
        assert f.evaluate([]) == 0
        assert f.evaluate([0, 1]) == 3

    def test_cut(self):
        f = build_oracle(CUT2)
        assert f.evaluate([0]) == 1
        assert f.evaluate([0, 1]) == 0

    def test_coverage_matches_reference(self):
        rng = np.random.default_rng(3)
        spec = random_coverage(7, rng)
        f = build_oracle(spec)
        w = spec.get("item_weights") or [1.0] * spec["m"]
        for S in ref.subsets(7):
            assert f.evaluate(list(S)) == pytest.approx(ref.coverage_value(spec["covers"], w, S), abs=1e-12)

    def test_cut_matches_reference(self):
        spec = random_cut(6, np.random.default_rng(4))
        f = build_oracle(spec)
        for S in ref.subsets(6):
            assert f.evaluate(list(S)) == pytest.approx(ref.cut_value(spec["weights"], S), abs=1e-12)

    def test_metric_matches_reference(self):
        spec = random_plane_metric(6, np.random.default_rng(5))
        f = build_oracle(spec)
        for S in ref.subsets(6):
            assert f.evaluate(list(S)) == pytest.approx(ref.metric_value(spec["points"], S), abs=1e-12)

    def test_sum_and_product_are_pointwise(self):
        rng = np.random.default_rng(6)
        a, b = random_coverage(5, rng), random_line_metric(5, rng)
        fa, fb = build_oracle(a), build_oracle(b)
        s = build_oracle({"type": "sum", "parts": [a, b]})
        p = build_oracle({"type": "product", "factors": [a, b]})
        va, vb = np.array(values_of(fa)), np.array(values_of(fb))
        assert np.array_equal(values_of(s), va + vb)
        assert np.array_equal(values_of(p), va * vb)

    def test_generators_are_normalized(self):
        rng = np.random.default_rng(7)
        for spec in (random_coverage(6, rng), random_cut(6, rng), random_modular(6, rng),
                     random_line_metric(6, rng), random_plane_metric(6, rng),
                     random_prop_submod(6, rng, True), random_prop_submod(6, rng, False),
                     random_table(4, rng)):
            assert build_oracle(spec).evaluate([]) == 0


class TestSpecErrors:
    def test_triangle_violation_names_triple(self):
        D = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
        assert check_triangle_inequality(D) == (0, 1, 2)
        with pytest.raises(SpecError, match=r"\(0, 1, 2\)"):
            build_oracle({"type": "metric_diversity", "matrix": D})

    def test_triangle_tolerance_is_relative(self):
        D = np.array([[0, 1, 2 + 1e-12], [1, 0, 1], [2 + 1e-12, 1, 0]])
        assert check_triangle_inequality(D) is None

    def test_mismatched_product(self):
        with pytest.raises(SpecError, match="factors"):
            build_oracle({"type": "product", "factors": [{"type": "modular", "weights": [1, 2]},
                                                         {"type": "modular", "weights": [1]}]})

    def test_table_checks(self):
        with pytest.raises(SpecError, match="exactly 4"):
            build_oracle({"type": "table", "n": 2, "values": [0, 1, 1]})
        with pytest.raises(SpecError, match="empty set"):
            build_oracle({"type": "table", "n": 1, "values": [1, 1]})
        with pytest.raises(SpecError):
            build_oracle({"type": "table", "n": 17, "values": [0]})

    def test_unknown_type_has_path(self):
        with pytest.raises(SpecError, match=r"\$\.parts\[1\]"):
            build_oracle({"type": "sum", "parts": [{"type": "modular", "weights": [1]}, {"type": "nope"}]})

    def test_asymmetric_and_negative(self):
        with pytest.raises(SpecError, match="symmetric"):
            build_oracle({"type": "graph_cut", "weights": [[0, 1], [2, 0]]})
        with pytest.raises(SpecError, match="negative"):
            build_oracle({"type": "metric_diversity", "matrix": [[0, -1], [-1, 0]]})

    def test_bad_json_reports_line(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{\n  "type": "modular",\n  "weights": [1, 2,]\n}\n')
        with pytest.raises(SpecError, match="line 3"):
            load_spec(str(p))

    def test_load_spec_forms(self, tmp_path):
        p = tmp_path / "f.json"
        p.write_text(json.dumps(CUT2))
        assert load_spec(str(p))[0] == CUT2
        assert load_spec(json.dumps(CUT2))[0] == CUT2
        assert load_spec(CUT2)[0] == CUT2


class TestStructuralChecks:
    def test_monotone(self):
        assert check_monotone(build_oracle(LINE3)).holds
        assert check_monotone(build_oracle({"type": "modular", "weights": [3, 1, 2]})).holds
        r = check_monotone(build_oracle(CUT2))
        assert not r.holds
        assert (r.witness["S"], r.witness["e"], r.witness["marginal"]) == ([0], 1, -1)

    def test_submodular(self):
        assert check_submodular(build_oracle(random_coverage(6, np.random.default_rng(1)))).holds
        assert check_submodular(build_oracle(CUT2)).holds
        assert check_submodular(build_oracle(random_cut(6, np.random.default_rng(2)))).holds
        r = check_submodular(build_oracle(LINE3))
        assert not r.holds
        w = r.witness
        assert w["gain_A"] < w["gain_B"]
        assert set(w["A"]) <= set(w["B"]) and w["e"] not in w["B"]

    def test_proportionally_submodular_members(self):
        rng = np.random.default_rng(8)
        assert check_proportionally_submodular(build_oracle(random_plane_metric(4, rng))).holds
        assert check_proportionally_submodular(build_oracle(random_coverage(6, rng))).holds

    def test_small_table_is_not_a_violation(self):
        # (0, 0, 0, 1): every ordered pair satisfies the inequality
        f = build_oracle({"type": "table", "n": 2, "values": [0, 0, 0, 1]})
        assert check_proportionally_submodular(f).holds
        assert ref.first_prop_violation([0, 0, 0, 1], 2) is None

    def test_planted_violation_witness(self):
        f = build_oracle(PLANTED_PROP)
        r = check_proportionally_submodular(f)
        S, T, gap = ref.first_prop_violation(PLANTED_PROP["values"], 3)
        assert (S, T, gap) == ([0, 1], [0, 2], -1)
        assert not r.holds
        assert (r.witness["S"], r.witness["T"], r.witness["gap"]) == (S, T, gap)

    def test_witness_is_first_in_order_on_random_tables(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            spec = random_table(3, rng)
            f = build_oracle(spec)
            expected = ref.first_prop_violation(spec["values"], 3)
            r = check_proportionally_submodular(f)
            if expected is None:
                assert r.holds
            else:
                assert (r.witness["S"], r.witness["T"]) == (expected[0], expected[1])

    def test_sampled_mode_and_guard(self):
        f = build_oracle({"type": "modular", "weights": list(range(1, 23))})
        with pytest.raises(CapacityError):
            check_monotone(f)
        r = check_monotone(f, samples=200, seed=1)
        assert r.holds and not r.exhaustive

    def test_metric_decomposition(self):
        # f(A | B) = f(A) + f(B) + d(A, B) on disjoint pairs
        f = build_oracle(random_plane_metric(7, np.random.default_rng(10)))
        masks = masks_in_order(7)
        for A in masks[::7]:
            for B in masks[::5]:
                if int(A) & int(B):
                    continue
                a, b = Subset(int(A), 7), Subset(int(B), 7)
                lhs = f.evaluate(a | b)
                assert lhs == pytest.approx(f.evaluate(a) + f.evaluate(b) + f.cross(a, b), rel=1e-12, abs=1e-12)
