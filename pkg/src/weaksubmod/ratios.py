"""Local submodularity ratios and checks of their analytic lower bounds.

For disjoint ``A`` and non-empty ``B`` the pair data is
``sum = sum_{e in B} f_A(e)`` and ``joint = f_A(B)``; the local ratio is any
``gamma`` with ``sum >= gamma * joint``.  Pairs are classified by the sign of
``joint``: it counts as zero when ``|joint| <= max(1e-12, 1e-9 |f(A)|)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import zoo
from .core import (
    ABS_TOL,
    REL_TOL,
    CapacityError,
    ContractError,
    DummyAugmentedOracle,
    SetFunction,
    Subset,
    as_subset,
    masks_in_order,
    order_rank,
    popcount,
)
from .guarantees import BoundParams, GammaProfile
from .maximizers import brute_force_opt, exact_expectation

# Exhaustive pair scans touch 3^n pairs.
MAX_PAIR_N = 16

POSITIVE, NEGATIVE, ZERO = "positive", "negative", "zero"


def sign_slack(f_a):
    return np.maximum(ABS_TOL, REL_TOL * np.abs(f_a))


def pair_slack(*scales):
    """Absolute slack for an inequality between quantities of the given magnitudes."""
    return ABS_TOL + REL_TOL * np.max(np.abs(np.stack(np.broadcast_arrays(*scales))), axis=0)


@dataclass
class PairRatio:
    A: list
    B: list
    sum_marginals: float
    joint_marginal: float
    sign_class: str

    @property
    def ratio(self) -> float:
        if self.sign_class == ZERO:
            return math.nan
        return self.sum_marginals / self.joint_marginal

    def to_dict(self):
        return asdict(self)


def _classify(joint, f_a):
    return np.where(np.abs(joint) <= sign_slack(f_a), 0, np.sign(joint)).astype(np.int8)


_CLASS_NAMES = {1: POSITIVE, -1: NEGATIVE, 0: ZERO}


def local_ratio(f: SetFunction, A, B) -> PairRatio:
    """Pair data for one ``(A, B)``, using ``|B| + 2`` evaluations."""
    A = as_subset(A, f.capacity)
    B = as_subset(B, f.capacity)
    if not A.isdisjoint(B):
        raise ContractError(f"A={A!r} and B={B!r} overlap")
    if not B.bits:
        raise ContractError("B must be non-empty")
    masks = [A.bits, A.bits | B.bits] + [A.bits | 1 << e for e in B]
    v = f.evaluate_many(masks)
    joint = float(v[1] - v[0])
    total = float((v[2:] - v[0]).sum())
    cls = int(_classify(np.array([joint]), np.array([v[0]]))[0])
    return PairRatio(list(A), list(B), total, joint, _CLASS_NAMES[cls])


# ---------------------------------------------------------------------------
# Pair scans


@dataclass
class PairScan:
    """Column arrays describing a set of disjoint pairs, in enumeration order."""

    n: int
    A: np.ndarray
    B: np.ndarray
    f_a: np.ndarray
    f_ab: np.ndarray
    sums: np.ndarray
    exhaustive: bool = True

    def __post_init__(self):
        self.joint = self.f_ab - self.f_a
        self.a = popcount(self.A)
        self.b = popcount(self.B)
        self.cls = _classify(self.joint, self.f_a)

    def __len__(self):
        return len(self.A)

    def pair(self, i) -> PairRatio:
        return PairRatio(list(Subset(int(self.A[i]), self.n)), list(Subset(int(self.B[i]), self.n)),
                         float(self.sums[i]), float(self.joint[i]), _CLASS_NAMES[int(self.cls[i])])

    def slack(self):
        return pair_slack(self.f_a, self.f_ab, self.sums)


def _pair_values(A, B, n, values):
    f_a = values(A)
    f_ab = values(A | B)
    sums = np.zeros(len(A))
    for e in range(n):
        sel = (B >> e & 1).astype(bool)
        if sel.any():
            sums[sel] += values(A[sel] | np.int64(1) << e) - f_a[sel]
    return f_a, f_ab, sums


def scan_pairs(f: SetFunction, max_a=None, max_b=None, samples=None, seed=0, table=None) -> PairScan:
    """All disjoint pairs with ``|A| <= max_a`` and ``1 <= |B| <= max_b``.

    Pairs are ordered by ``A`` and then ``B``, each in subset enumeration
    order.  With ``samples`` the pairs are drawn uniformly instead (each
    element independently lands in ``A``, ``B`` or neither) and the scan is
    marked non-exhaustive.
    """
    n = f.n
    max_a = n if max_a is None else min(max_a, n)
    max_b = n if max_b is None else min(max_b, n)
    if samples is not None:
        return _sample_pairs(f, max_a, max_b, samples, seed)
    if n > MAX_PAIR_N:
        raise CapacityError(f"exhaustive pair scan needs n <= {MAX_PAIR_N}, got n={n}; pass samples=...")
    t = f.table() if table is None else table
    A_all = masks_in_order(n, max_a)
    As, Bs = [], []
    for B in masks_in_order(n, max_b)[1:]:
        A = A_all[(A_all & B) == 0]
        As.append(A)
        Bs.append(np.full(len(A), B, dtype=np.int64))
    A = np.concatenate(As) if As else np.zeros(0, np.int64)
    B = np.concatenate(Bs) if Bs else np.zeros(0, np.int64)
    rank = order_rank(n)
    order = np.lexsort((rank[B], rank[A]))
    A, B = A[order], B[order]
    f_a, f_ab, sums = _pair_values(A, B, n, lambda m: t[m])
    return PairScan(n, A, B, f_a, f_ab, sums, True)


def _sample_pairs(f, max_a, max_b, samples, seed):
    n = f.n
    rng = np.random.default_rng(seed)
    A_out, B_out = [], []
    got, attempts = 0, 0
    while got < samples:
        attempts += 1
        if attempts > 1000:
            raise ContractError("could not draw pairs within the requested size limits")
        lab = rng.integers(0, 3, size=(samples, n))
        w = np.int64(1) << np.arange(n, dtype=np.int64)
        A = ((lab == 1) * w).sum(1)
        B = ((lab == 2) * w).sum(1)
        ok = (B != 0) & (popcount(A) <= max_a) & (popcount(B) <= max_b)
        A_out.append(A[ok])
        B_out.append(B[ok])
        got += int(ok.sum())
    A = np.concatenate(A_out)[:samples]
    B = np.concatenate(B_out)[:samples]
    f_a, f_ab, sums = _pair_values(A, B, n, f.evaluate_many)
    return PairScan(n, A, B, f_a, f_ab, sums, False)


# ---------------------------------------------------------------------------
# Fitting global ratios


@dataclass
class RatioReport:
    n: int
    exhaustive: bool
    pair_count: int
    class_counts: dict
    fitted_weak_gamma: float | None
    weak_raw_min: float | None
    weak_infeasible_witness: dict | None
    fitted_pseudo_gamma: float | None
    pseudo_interval: tuple | None
    pseudo_infeasible_witness: dict | None
    minima: list  # rows (a, b, min positive-class ratio, count)
    scan: PairScan | None = field(default=None, repr=False)

    @property
    def infeasible_witness(self):
        return self.weak_infeasible_witness

    def to_dict(self):
        d = {k: v for k, v in vars(self).items() if k != "scan"}
        d["pseudo_interval"] = None if self.pseudo_interval is None else list(self.pseudo_interval)
        return d

    def minima_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "min_ratio", "count"])
        for row in self.minima:
            w.writerow([row["a"], row["b"], repr(row["min_ratio"]), row["count"]])
        return buf.getvalue()


def _witness(scan, i, reason):
    return {"reason": reason, **scan.pair(i).to_dict()}


def _first(mask):
    idx = np.flatnonzero(mask)
    return int(idx[0]) if len(idx) else None


def _fit_weak(scan):
    pos, neg, zero = scan.cls == 1, scan.cls == -1, scan.cls == 0
    slack = scan.slack()
    i = _first(pos & (scan.sums <= 0))
    if i is not None:
        return None, None, _witness(scan, i, "positive joint gain with non-positive sum of singleton gains")
    i = _first(zero & (scan.sums < -slack))
    if i is not None:
        return None, None, _witness(scan, i, "zero joint gain with negative sum of singleton gains")
    # limits are the tolerant suprema: sum + slack >= gamma * joint (or joint / gamma)
    limits, raws = [], []
    if pos.any():
        limits.append(np.min((scan.sums[pos] + slack[pos]) / scan.joint[pos]))
        raws.append(np.min(scan.sums[pos] / scan.joint[pos]))
    cons = neg & (scan.sums + slack < 0)
    if cons.any():
        limits.append(np.min(scan.joint[cons] / (scan.sums[cons] + slack[cons])))
        raws.append(np.min(scan.joint[cons] / scan.sums[cons]))
    if not limits:
        return 1.0, None, None
    return min(1.0, float(min(limits))), float(min(raws)), None


def _fit_pseudo(scan):
    pos, neg, zero = scan.cls == 1, scan.cls == -1, scan.cls == 0
    slack = scan.slack()
    i = _first(zero & (scan.sums < -slack))
    if i is not None:
        return None, None, _witness(scan, i, "zero joint gain with negative sum of singleton gains")
    i = _first(pos & (scan.sums <= 0))
    if i is not None:
        return None, None, _witness(scan, i, "positive joint gain with non-positive sum of singleton gains")
    hi = 1.0
    if pos.any():
        r = np.where(pos, (scan.sums + slack) / np.where(pos, scan.joint, 1.0), np.inf)
        hi = min(hi, float(r.min()))
    lo, lo_i = 0.0, None
    if neg.any():
        r = np.where(neg, (scan.sums + slack) / np.where(neg, scan.joint, 1.0), -np.inf)
        lo_i = int(np.argmax(r))
        lo = max(lo, float(r[lo_i]))
    if lo > 1.0 + REL_TOL:
        return None, (lo, hi), _witness(scan, lo_i, "negative pair needs gamma > 1")
    if lo > hi + REL_TOL:
        return None, (lo, hi), _witness(scan, lo_i, "negative pair lower limit exceeds positive pair upper limit")
    return hi, (lo, hi), None


def _minima_table(scan):
    pos = scan.cls == 1
    rows = []
    if not pos.any():
        return rows
    a, b = scan.a[pos], scan.b[pos]
    r = scan.sums[pos] / scan.joint[pos]
    for aa, bb in sorted(set(zip(a.tolist(), b.tolist()))):
        sel = (a == aa) & (b == bb)
        rows.append({"a": aa, "b": bb, "min_ratio": float(r[sel].min()), "count": int(sel.sum())})
    return rows


def ratio_report(f: SetFunction, max_pair_size=None, samples=None, seed=0) -> RatioReport:
    """Scan pairs and fit both global ratios; ``max_pair_size`` bounds ``|A|`` and ``|B|``."""
    scan = scan_pairs(f, max_pair_size, max_pair_size, samples, seed)
    weak, weak_raw, weak_w = _fit_weak(scan)
    pseudo, interval, pseudo_w = _fit_pseudo(scan)
    counts = {name: int((scan.cls == c).sum()) for c, name in _CLASS_NAMES.items()}
    return RatioReport(f.n, scan.exhaustive, len(scan), counts, weak, weak_raw, weak_w,
                       pseudo, interval, pseudo_w, _minima_table(scan), scan)


def fit_weak_gamma(f: SetFunction, max_pair_size=None, samples=None, seed=0) -> RatioReport:
    """Largest ``gamma`` in (0, 1] with ``sum >= min(gamma joint, joint / gamma)`` on every pair."""
    return ratio_report(f, max_pair_size, samples, seed)


def fit_pseudo_gamma(f: SetFunction, max_pair_size=None, samples=None, seed=0) -> RatioReport:
    """Largest ``gamma`` in (0, 1] with ``sum >= gamma joint`` on every pair, plus the feasible interval."""
    return ratio_report(f, max_pair_size, samples, seed)


def gamma_profile(f: SetFunction, k: int, at_most=False, samples=None, seed=0) -> GammaProfile:
    """``gamma_i`` = smallest positive-class ratio over pairs with ``|A| = i`` and ``1 <= |B| <= k``.

    With ``at_most`` the minimum runs over ``|A| <= i``, which covers runs
    whose current set holds fewer than ``i`` original elements.  Entries are
    clipped to [0, 1]; indices with no positive pair default to 1 and are
    listed in ``flags``.  Negative pairs are checked for ``sum >= joint``.
    """
    if k < 1:
        raise ContractError(f"invalid budget k={k}")
    scan = scan_pairs(f, k - 1, k, samples, seed)
    pos = scan.cls == 1
    joint = np.where(pos, scan.joint, 1.0)
    ratio = np.where(pos, scan.sums / joint, np.inf)
    tolerant = np.where(pos, (scan.sums + scan.slack()) / joint, np.inf)
    raw, fit = np.full(k, np.nan), np.full(k, np.nan)
    for i in range(k):
        sel = pos & ((scan.a <= i) if at_most else (scan.a == i))
        if sel.any():
            raw[i], fit[i] = ratio[sel].min(), tolerant[sel].min()
    flags = [i for i in range(k) if np.isnan(raw[i])]
    gamma = np.where(np.isnan(fit), 1.0, np.clip(fit, 0.0, 1.0))
    bad = _first((scan.cls == -1) & (scan.sums < scan.joint - scan.slack()))
    witness = None if bad is None else _witness(scan, bad, "negative pair with sum below joint")
    return GammaProfile(gamma, flags, raw, witness)


# ---------------------------------------------------------------------------
# Analytic bounds


def _check_ab(a, b, min_a=0):
    if b < 1:
        raise ContractError(f"need |B| >= 1, got b={b}")
    if a < min_a:
        raise ContractError(f"need |A| >= {min_a}, got a={a}")


def bound_metric(a, b):
    """``a / (a + b - 1)``, or 1 when ``b = 1``."""
    _check_ab(a, b)
    return 1.0 if b == 1 else a / (a + b - 1)


def bound_prop_submod(a, b):
    """``3a(1+a) / (3a^2 + 3ab + b^2 - 1)``, or 1 when ``b = 1``."""
    _check_ab(a, b)
    return 1.0 if b == 1 else 3 * a * (1 + a) / (3 * a * a + 3 * a * b + b * b - 1)


def bound_card_scaled(a, b):
    """``(a + 1) / (a + b)`` for ``|S| f(S)`` with ``f`` submodular."""
    _check_ab(a, b)
    return (a + 1) / (a + b)


def bound_card_divided(a, b):
    """``(a + b) / (a + 1)``: for ``f(S)/|S|`` the sum of singleton gains is at least this times the joint gain."""
    _check_ab(a, b, min_a=1)
    return (a + b) / (a + 1)


def bound_product(f_a, f_ab, gamma_g):
    """``f(A) / f(A | B) * gamma_g`` for the product with a monotone submodular factor ``f``."""
    if not 0 < f_a <= f_ab:
        raise ContractError(f"need 0 < f(A) <= f(A|B), got f(A)={f_a}, f(A|B)={f_ab}")
    if not 0 <= gamma_g <= 1:
        raise ContractError(f"gamma_g must lie in [0, 1], got {gamma_g}")
    return f_a / f_ab * gamma_g


def _metric_arr(a, b):
    return np.where(b == 1, 1.0, a / np.maximum(a + b - 1, 1))


def _prop_arr(a, b):
    den = np.maximum(3 * a * a + 3 * a * b + b * b - 1.0, 1.0)
    return np.where(b == 1, 1.0, 3 * a * (1 + a) / den)


def _card_scaled_arr(a, b):
    return (a + 1) / (a + b)


def _share(part, scan):
    """``g(A) / g(A | B)`` for a monotone part ``g``, 0 where ``g(A | B) = 0``."""
    t = part.table()
    ga, gab = t[scan.A], t[scan.A | scan.B]
    return np.divide(ga, gab, out=np.zeros(len(ga)), where=gab > 0)


def _cover(n, rng):
    return zoo.random_coverage(n, rng)


def _instance(family, n, rng, t):
    """Return ``(spec, bound_fn)`` where ``bound_fn(scan, parts)`` gives the per-pair bound."""
    cov = _cover(n, rng)
    if family == "metric":
        spec = zoo.random_line_metric(n, rng) if t % 2 == 0 else zoo.random_plane_metric(n, rng)
        return spec, lambda s, f: _metric_arr(s.a, s.b)
    if family == "prop_submod":
        return zoo.random_prop_submod(n, rng, monotone=t % 2 == 0), lambda s, f: _prop_arr(s.a, s.b)
    if family in ("card_scaled", "card_divided"):
        inner = zoo.random_cut(n, rng) if t % 2 == 0 else {"type": "sum", "parts": [cov, zoo.random_cut(n, rng)]}
        if family == "card_scaled":
            return {"type": "card_scaled", "inner": inner}, lambda s, f: _card_scaled_arr(s.a, s.b)
        return {"type": "card_divided", "inner": inner}, lambda s, f: (s.a + s.b) / (s.a + 1.0)
    if family == "product_submod_submod":
        spec = {"type": "product", "factors": [cov, _cover(n, rng)]}
        return spec, lambda s, f: np.maximum(_share(f.factors[0], s), _share(f.factors[1], s))
    if family == "product_submod_metric":
        spec = {"type": "product", "factors": [cov, zoo.random_plane_metric(n, rng)]}
        return spec, lambda s, f: _share(f.factors[0], s) * _metric_arr(s.a, s.b)
    if family == "product_submod_prop":
        spec = {"type": "product", "factors": [cov, zoo.random_prop_submod(n, rng, monotone=True)]}
        return spec, lambda s, f: _share(f.factors[0], s) * _prop_arr(s.a, s.b)
    if family == "product_submod_summetric":
        g = {"type": "sum", "parts": [_cover(n, rng), zoo.random_plane_metric(n, rng)]}
        spec = {"type": "product", "factors": [cov, g]}
        return spec, lambda s, f: _share(f.factors[0], s) * _metric_arr(s.a, s.b)
    if family == "sum_submod_metric":
        spec = {"type": "sum", "parts": [cov, zoo.random_plane_metric(n, rng)]}
        return spec, lambda s, f: _metric_arr(s.a, s.b)
    if family == "sum_submod_cardcut":
        spec = {"type": "sum", "parts": [cov, {"type": "card_scaled", "inner": zoo.random_cut(n, rng)}]}
        return spec, lambda s, f: _card_scaled_arr(s.a, s.b)
    if family == "sum_submod_prop":
        g = zoo.random_prop_submod(n, rng, monotone=False)
        g["parts"] = g["parts"][1:]  # drop its own coverage term; f supplies the submodular part
        spec = {"type": "sum", "parts": [cov, g]}
        return spec, lambda s, f: _prop_arr(s.a, s.b)
    if family == "sum_metric_cardscaled":
        spec = {"type": "sum", "parts": [zoo.random_plane_metric(n, rng),
                                         {"type": "card_scaled", "inner": _cover(n, rng)}]}
        return spec, lambda s, f: np.minimum(_metric_arr(s.a, s.b), _card_scaled_arr(s.a, s.b))
    raise ContractError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


FAMILIES = ("metric", "prop_submod", "card_scaled", "card_divided", "product_submod_submod",
            "product_submod_metric", "product_submod_prop", "product_submod_summetric",
            "sum_submod_metric", "sum_submod_cardcut", "sum_submod_prop", "sum_metric_cardscaled")


def instance_rng(seed, trial):
    return np.random.default_rng([seed, trial])


def family_instance(family, n, seed, trial):
    """The seeded random instance spec used for ``trial`` of ``family``."""
    if family not in FAMILIES:
        raise ContractError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    return _instance(family, n, instance_rng(seed, trial), trial)[0]


def check_pair_bounds(scan: PairScan, bound, proved_orientation=False):
    """Indices of pairs violating the bound.

    Positive pairs need ``sum >= bound * joint``; negative pairs need
    ``sum >= joint``; zero pairs need ``sum >= 0``.  With
    ``proved_orientation`` every pair needs ``sum >= bound * joint``.
    """
    slack = scan.slack()
    if proved_orientation:
        return np.flatnonzero(scan.sums < bound * scan.joint - slack)
    need = np.where(scan.cls == 1, bound * scan.joint, np.where(scan.cls == -1, scan.joint, 0.0))
    return np.flatnonzero(scan.sums < need - slack)


def verify_example_bounds(family, trials=50, n=8, k=4, seed=0):
    """Check a family's analytic ratio bound on every disjoint pair of ``trials`` seeded instances."""
    if family not in FAMILIES:
        raise ContractError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    if n > MAX_PAIR_N:
        raise CapacityError(f"exhaustive pair scan needs n <= {MAX_PAIR_N}, got n={n}")
    instances = []
    for t in range(trials):
        spec, bound_fn = _instance(family, n, instance_rng(seed, t), t)
        f = zoo.build_oracle(spec)
        scan = scan_pairs(f, max_b=k)
        bound = bound_fn(scan, f)
        if family == "card_divided":
            keep = scan.a >= 1
            bad = np.flatnonzero(keep)[check_pair_bounds(_subscan(scan, keep), bound[keep], True)]
        else:
            bad = check_pair_bounds(scan, bound)
        rec = {"instance": t, "pairs": len(scan), "failures": len(bad), "passed": len(bad) == 0}
        if len(bad):
            i = int(bad[0])
            rec["witness"] = {**scan.pair(i).to_dict(), "bound": float(bound[i])}
        instances.append(rec)
    return {"family": family, "trials": trials, "n": n, "k": k, "seed": seed,
            "passed": all(r["passed"] for r in instances), "instances": instances}


def _subscan(scan, keep):
    return PairScan(scan.n, scan.A[keep], scan.B[keep], scan.f_a[keep], scan.f_ab[keep], scan.sums[keep])


# ---------------------------------------------------------------------------
# Lemmas behind the bounds


def t_constant(a, b) -> Fraction:
    """``T_{a,b}``: the mean of the coefficients ``c_i`` bounding ``f_A(B)`` by singleton gains."""
    c = [Fraction(a + i - 1, a) + sum(Fraction(a + j - 1, a * (a + 1)) for j in range(i + 1, b + 1))
         for i in range(1, b + 1)]
    return sum(c, Fraction(0)) / b


def t_constant_closed(a, b) -> Fraction:
    return Fraction(-b + 3 * a * a * b + 3 * a * b * b + b ** 3, 3 * a * (1 + a)) / b


def check_t_constant(max_a=12, max_b=12):
    """Compare the coefficient sum with its closed form and with ``bound_prop_submod``."""
    failures = []
    for a in range(1, max_a + 1):
        for b in range(1, max_b + 1):
            T, closed = t_constant(a, b), t_constant_closed(a, b)
            if T != closed or not math.isclose(bound_prop_submod(a, b), 1 / T, rel_tol=1e-12):
                failures.append({"a": a, "b": b, "T": str(T), "closed": str(closed)})
    return failures


def check_base_decrement(f: SetFunction, table=None):
    """``a f_{A+e'}(e) <= f_A(e') + (a+1) f_A(e)`` for all ``A`` with ``a >= 1`` and distinct ``e, e'``."""
    n = f.n
    t = f.table() if table is None else table
    masks = masks_in_order(n)
    rank = order_rank(n)
    a_all = popcount(masks)
    best = None
    for e in range(n):
        for e2 in range(n):
            if e == e2:
                continue
            b1, b2 = np.int64(1) << e, np.int64(1) << e2
            A = masks[((masks & (b1 | b2)) == 0) & (a_all >= 1)]
            a = popcount(A)
            lhs = a * (t[A | b1 | b2] - t[A | b2])
            rhs = (t[A | b2] - t[A]) + (a + 1) * (t[A | b1] - t[A])
            bad = A[lhs > rhs + pair_slack(a * t[A | b1 | b2], (a + 1) * t[A | b1])]
            if len(bad):
                x = int(bad[np.argmin(rank[bad])])
                if best is None or (rank[x], e, e2) < best[0]:
                    best = ((rank[x], e, e2), {"A": list(Subset(x, n)), "e": e, "e_prime": e2})
    return None if best is None else best[1]


def check_base_shrink(f: SetFunction, table=None):
    """``f_{A|B}(e) <= (a+b)/a f_A(e) + (a+b)/(a(a+1)) sum_{B} f_A(e_i)`` for ``a >= 1``."""
    n = f.n
    t = f.table() if table is None else table
    rank = order_rank(n)
    best = None
    for e in range(n):
        be = np.int64(1) << e
        rest = np.array([m for m in masks_in_order(n) if not m & be], dtype=np.int64)
        for B in rest[1:]:
            A = rest[((rest & B) == 0) & (rest != 0)]
            a = popcount(A).astype(np.float64)
            b = float(popcount(np.array([B]))[0])
            sums = np.zeros(len(A))
            for j in range(n):
                if B >> j & 1:
                    sums += t[A | np.int64(1) << j] - t[A]
            lhs = t[A | B | be] - t[A | B]
            gain = t[A | be] - t[A]
            rhs = (a + b) / a * gain + (a + b) / (a * (a + 1)) * sums
            bad = A[lhs > rhs + pair_slack(t[A | B | be], (a + b) / a * t[A | be], (a + b) * sums)]
            if len(bad):
                x = int(bad[np.argmin(rank[bad])])
                key = (rank[x], rank[B], e)
                if best is None or key < best[0]:
                    best = (key, {"A": list(Subset(x, n)), "B": list(Subset(int(B), n)), "e": e})
    return None if best is None else best[1]


def check_inter_set_lemma(f: zoo.MetricDiversity, table=None):
    """``a f(B) <= (b - 1) d(A, B)`` and ``f(A|B) = f(A) + f(B) + d(A, B)`` on all disjoint pairs.

    ``d(A, B)`` is computed directly from the distance matrix.
    """
    n = f.n
    t = f.table() if table is None else table
    X = np.asarray([[m >> i & 1 for i in range(n)] for m in range(1 << n)], dtype=np.float64)
    D = f.matrix
    for B in masks_in_order(n)[1:]:
        rest = np.arange(1 << n, dtype=np.int64)
        A = rest[(rest & B) == 0]
        d = X[A] @ D @ X[B]
        a = popcount(A)
        b = int(popcount(np.array([B]))[0])
        slack = pair_slack(t[A | B], a * t[B], d * max(b, 1))
        bad = np.flatnonzero(a * t[B] > (b - 1) * d + slack)
        if len(bad):
            return {"lemma": "inter_set_distance", "A": list(Subset(int(A[bad[0]]), n)), "B": list(Subset(int(B), n))}
        bad = np.flatnonzero(np.abs(t[A | B] - t[A] - t[B] - d) > slack)
        if len(bad):
            return {"lemma": "decomposition", "A": list(Subset(int(A[bad[0]]), n)), "B": list(Subset(int(B), n))}
    return None


LEMMAS = ("base_decrement", "base_shrink", "t_constant", "inter_set")


def verify_lemmas(trials=50, n=8, seed=0, lemmas=LEMMAS):
    """Run the lemma suite on seeded instances.

    The two base lemmas use proportionally submodular instances (alternately
    monotone and not); the inter-set lemma uses metric diversity on points
    on a line and in the unit square.
    """
    out = {}
    for name in lemmas:
        if name == "t_constant":
            fails = check_t_constant()
            out[name] = {"passed": not fails, "failures": fails}
            continue
        if name not in LEMMAS:
            raise ContractError(f"unknown lemma {name!r}; expected one of {', '.join(LEMMAS)}")
        recs = []
        for t in range(trials):
            rng = instance_rng(seed, t)
            if name == "inter_set":
                spec = zoo.random_line_metric(n, rng) if t % 2 == 0 else zoo.random_plane_metric(n, rng)
                w = check_inter_set_lemma(zoo.build_oracle(spec))
            else:
                f = zoo.build_oracle(zoo.random_prop_submod(n, rng, monotone=t % 2 == 0))
                w = (check_base_decrement if name == "base_decrement" else check_base_shrink)(f)
            recs.append({"instance": t, "passed": w is None, "witness": w})
        out[name] = {"passed": all(r["passed"] for r in recs), "instances": recs}
    return {"trials": trials, "n": n, "seed": seed, "passed": all(v["passed"] for v in out.values()),
            "lemmas": out}


# ---------------------------------------------------------------------------
# Per-iteration parameters along the algorithm's reachable states


@dataclass
class FittedParams:
    params: BoundParams
    feasible: bool
    reason: str | None
    opt: list
    opt_value: float
    expectation: object = field(repr=False)


def fit_bound_params(f: SetFunction, k: int, opt=None) -> FittedParams:
    """Fit ``alpha_i, beta_i, alpha_bar_i, beta_bar_i`` on every reachable state of the algorithm.

    For iteration ``i`` and every state ``S = S_{i-1}`` with candidate set
    ``M``: ``alpha_{i-1}`` and ``beta_{i-1}`` must satisfy
    ``sum_{e in OPT} f_S(e) >= min(alpha Y, beta Y)`` with ``Y = f_S(OPT)``,
    and ``alpha_bar_i``, ``beta_bar_i`` the same inequality for the gains of
    ``M`` on top of ``S | OPT``.  ``alpha`` is the largest value in [0, 1];
    ``beta_bar`` is the smallest admissible value.
    """
    if opt is None:
        run = brute_force_opt(f, k)
        opt, opt_value = run.set, run.value
    else:
        opt_value = f.evaluate(opt)
    O = as_subset(opt, f.n).bits
    res = exact_expectation(f, k, reference=opt, keep_steps=True)
    aug = DummyAugmentedOracle(f, k)
    ev = lambda ms: aug.evaluate_many(np.asarray(ms, dtype=np.int64))  # noqa: E731
    alpha, beta = np.zeros(k), np.zeros(k)
    alpha_bar, beta_bar = np.zeros(k), np.zeros(k)
    reason = None
    for i, step in enumerate(res.steps, 1):
        S = np.asarray(step.masks, dtype=np.int64)
        # OPT side: Y = f_S(OPT), sum over OPT of singleton gains
        fS, fSO = ev(S), ev(S | O)
        sumO = np.zeros(len(S))
        for e in Subset(O, f.n):
            sumO += ev(S | 1 << e) - fS
        a, b, why = _fit_pair(sumO, fSO - fS, pair_slack(fS, fSO, sumO), k)
        alpha[i - 1], beta[i - 1] = a, b
        reason = reason or (why and f"iteration {i}, OPT side: {why}")
        # candidate side: X = f_{S|OPT}(M)
        base = S | O
        Mm = np.array([sum(1 << e for e in M) for M in step.candidates], dtype=np.int64)
        fB, fBM = ev(base), ev(base | Mm)
        sumM = np.zeros(len(S))
        for r, M in enumerate(step.candidates):
            sumM[r] = float((ev([base[r] | 1 << e for e in M]) - fB[r]).sum())
        a, b, why = _fit_pair(sumM, fBM - fB, pair_slack(fB, fBM, sumM), k, low_alpha=True)
        alpha_bar[i - 1], beta_bar[i - 1] = a, b
        reason = reason or (why and f"iteration {i}, candidate side: {why}")
    params = BoundParams(alpha, beta, alpha_bar, beta_bar)
    return FittedParams(params, reason is None, reason, list(Subset(O, f.n)), opt_value, res)


def _fit_pair(total, joint, slack, k, low_alpha=False):
    """Fit ``total >= min(alpha joint, beta joint)`` with ``0 <= alpha <= beta <= k``.

    By default ``alpha`` is the largest admissible value in [0, 1] and
    ``beta`` the smallest value not below it.  With ``low_alpha`` ``beta`` is
    the smallest admissible value overall and ``alpha`` is capped by it.
    """
    pos, neg = joint > slack, joint < -slack
    zero = ~(pos | neg)
    why = None
    if np.any(zero & (total < -slack)):
        why = "zero joint gain with negative sum"
    alpha = 1.0
    if pos.any():
        alpha = float(np.min(total[pos] / joint[pos]))
        if alpha < 0:
            why = why or "positive joint gain with negative sum"
        alpha = min(1.0, max(0.0, alpha))
    need = float(np.max(total[neg] / joint[neg])) if neg.any() else 0.0
    if low_alpha:
        beta = max(0.0, need)
        alpha = min(alpha, beta)
    else:
        beta = max(alpha, need)
    if beta > k:
        why = why or f"beta={beta:.6g} exceeds k={k}"
        beta = float(k)
    return alpha, beta, why
