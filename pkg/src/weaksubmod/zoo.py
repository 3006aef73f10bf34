"""Concrete set-function families built from JSON-style specs.

A function spec is a dict with a ``"type"`` key::

    {"type": "modular", "weights": [3, 1, 2]}
    {"type": "coverage", "covers": [[0, 1], [1, 2]], "item_weights": [1, 1, 2]}
    {"type": "metric_diversity", "matrix": [[0, 1], [1, 0]]}
    {"type": "metric_diversity", "matrix_csv": "dist.csv"}
    {"type": "metric_diversity", "points": [[0, 0], [1, 0]]}
    {"type": "graph_cut", "weights": [[0, 1], [1, 0]]}
    {"type": "sum", "parts": [spec, spec, ...]}
    {"type": "product", "factors": [spec, spec]}
    {"type": "card_scaled", "inner": spec}
    {"type": "card_divided", "inner": spec}
    {"type": "table", "n": 2, "values": [0, 1, 1, 0]}

Table values are indexed by bitmask: bit ``i`` set means element ``i`` is in
the set.  ``points`` are embedded in the plane with Euclidean distance.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    MAX_ENUMERATION_N,
    CapacityError,
    ContractError,
    SetFunction,
    Subset,
    order_rank,
    popcount,
    tolerance,
)

MAX_TABLE_N = 16
# Pairwise checks (submodularity, proportional submodularity) scale as 4^n.
MAX_PAIR_CHECK_N = 12
MAX_CHECK_N = 20


class SpecError(ValueError):
    """A function spec failed validation; ``path`` locates the offending node."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Oracles


# Batch evaluators reduce each row along its own contiguous axis so a set's
# value does not depend on which batch it is evaluated in (no BLAS reordering).
_QUAD_CHUNK_ELEMS = 1 << 21


def _row_dot(X, w):
    return (X * w).sum(axis=1)


def _row_quadratic(X, M, Y):
    """``x_r^T M y_r`` for every row, summed in a fixed per-row order."""
    n = M.shape[0]
    out = np.empty(len(X))
    step = max(1, _QUAD_CHUNK_ELEMS // (n * n))
    for lo in range(0, len(X), step):
        x, y = X[lo:lo + step], Y[lo:lo + step]
        out[lo:lo + step] = (x[:, :, None] * y[:, None, :] * M).reshape(len(x), n * n).sum(axis=1)
    return out


class Modular(SetFunction):
    def __init__(self, weights, label="modular"):
        w = np.asarray(weights, dtype=np.float64)
        super().__init__(len(w), label)
        self.weights = w

    def _batch(self, X):
        return _row_dot(X, self.weights)


class Coverage(SetFunction):
    """Weighted coverage: total weight of items covered by at least one chosen element."""

    def __init__(self, covers, item_weights=None, m=None, label="coverage"):
        covers = [sorted(set(int(j) for j in c)) for c in covers]
        if m is None:
            m = 1 + max((max(c) for c in covers if c), default=-1)
        super().__init__(len(covers), label)
        self.m = int(m)
        self.item_weights = (np.ones(self.m) if item_weights is None
                             else np.asarray(item_weights, dtype=np.float64))
        self.incidence = np.zeros((self.n, self.m))
        for i, c in enumerate(covers):
            self.incidence[i, c] = 1.0
        self.covers = covers

    def _batch(self, X):
        # counts of covering elements are small integers, exact in any summation order
        return _row_dot((X @ self.incidence) > 0, self.item_weights)


class MetricDiversity(SetFunction):
    """Sum of pairwise distances inside the set."""

    def __init__(self, matrix, label="metric_diversity"):
        D = np.asarray(matrix, dtype=np.float64)
        super().__init__(len(D), label)
        self.matrix = D

    def _batch(self, X):
        return 0.5 * _row_quadratic(X, self.matrix, X)

    def cross(self, A: Subset, B: Subset) -> float:
        """``d(A, B)``: total distance between members of ``A`` and members of ``B``."""
        a = np.zeros(self.n)
        b = np.zeros(self.n)
        a[list(A)] = 1.0
        b[list(B)] = 1.0
        return float(a @ self.matrix @ b)


class GraphCut(SetFunction):
    """Total weight of edges with exactly one endpoint in the set."""

    def __init__(self, weights, label="graph_cut"):
        W = np.asarray(weights, dtype=np.float64)
        super().__init__(len(W), label)
        self.weights = W

    def _batch(self, X):
        return _row_quadratic(X, self.weights, 1.0 - X)


class Sum(SetFunction):
    def __init__(self, parts, label="sum"):
        super().__init__(parts[0].n, label)
        self.parts = list(parts)

    def _batch(self, X):
        out = np.zeros(len(X))
        for p in self.parts:
            out = out + p._batch(X)
        return out


class Product(SetFunction):
    def __init__(self, f, g, label="product"):
        super().__init__(f.n, label)
        self.factors = (f, g)

    def _batch(self, X):
        f, g = self.factors
        return f._batch(X) * g._batch(X)


class CardScaled(SetFunction):
    """``|S| * inner(S)``."""

    def __init__(self, inner, label="card_scaled"):
        super().__init__(inner.n, label)
        self.inner = inner

    def _batch(self, X):
        return X.sum(axis=1) * self.inner._batch(X)


class CardDivided(SetFunction):
    """``inner(S) / |S|``, defined as 0 on the empty set."""

    def __init__(self, inner, label="card_divided"):
        super().__init__(inner.n, label)
        self.inner = inner

    def _batch(self, X):
        size = X.sum(axis=1)
        vals = self.inner._batch(X)
        return np.divide(vals, size, out=np.zeros(len(X)), where=size > 0)


class Table(SetFunction):
    def __init__(self, values, label="table"):
        v = np.asarray(values, dtype=np.float64)
        n = int(round(np.log2(len(v))))
        super().__init__(n, label)
        self.values = v
        self._weights = 1 << np.arange(n, dtype=np.int64)

    def _batch(self, X):
        return self.values[X.astype(np.int64) @ self._weights]


# ---------------------------------------------------------------------------
# Spec validation and construction


def _matrix(node, key, path, base_dir):
    if key == "matrix_csv":
        p = Path(node[key])
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        try:
            with open(p, newline="") as fh:
                rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
        except (OSError, ValueError) as exc:
            raise SpecError(f"cannot read distance CSV {str(p)!r}: {exc}", f"{path}.matrix_csv")
        return np.array(rows)
    try:
        M = np.asarray(node[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"not a numeric matrix: {exc}", f"{path}.{key}")
    return M


def _square_symmetric(M, path, what):
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise SpecError(f"{what} must be a non-empty square matrix, got shape {M.shape}", path)
    if not np.all(np.isfinite(M)):
        raise SpecError(f"{what} has non-finite entries", path)
    if np.any(M < 0):
        i, j = np.argwhere(M < 0)[0]
        raise SpecError(f"{what} has negative entry at ({i}, {j})", path)
    if np.any(np.diag(M) != 0):
        raise SpecError(f"{what} must have a zero diagonal", path)
    if not np.array_equal(M, M.T):
        i, j = np.argwhere(M != M.T)[0]
        raise SpecError(f"{what} is not symmetric at ({i}, {j})", path)


def check_triangle_inequality(D, rel_tol=1e-9):
    """Return the first violating triple ``(i, j, k)`` with d(i,k) > d(i,j) + d(j,k), else None."""
    D = np.asarray(D, dtype=np.float64)
    slack = rel_tol * (D.max() if D.size else 0.0)
    for j in range(len(D)):
        bad = D > D[:, j][:, None] + D[j, :][None, :] + slack
        if bad.any():
            i, k = np.argwhere(bad)[0]
            return int(i), j, int(k)
    return None


def validate_distance_matrix(D, path="$"):
    _square_symmetric(D, path, "distance matrix")
    triple = check_triangle_inequality(D)
    if triple is not None:
        i, j, k = triple
        raise SpecError(
            f"triangle inequality violated by triple ({i}, {j}, {k}): "
            f"d({i},{k})={D[i, k]:.6g} > d({i},{j})+d({j},{k})={D[i, j] + D[j, k]:.6g}", path)


def build_oracle(spec, base_dir=None, path="$") -> SetFunction:
    """Validate ``spec`` and return the corresponding oracle."""
    f = _build(spec, base_dir, path)
    try:
        f.check_normalized()
    except ContractError as exc:
        raise SpecError(str(exc), path)
    f.spec = spec
    return f


def _build(spec, base_dir, path):
    if not isinstance(spec, dict) or "type" not in spec:
        raise SpecError("a function spec must be an object with a 'type' field", path)
    kind = spec["type"]
    label = spec.get("label", kind)

    if kind == "modular":
        w = np.asarray(spec.get("weights", []), dtype=np.float64)
        if w.ndim != 1 or len(w) < 1 or not np.all(np.isfinite(w)):
            raise SpecError("weights must be a non-empty list of finite reals", f"{path}.weights")
        return Modular(w, label)

    if kind == "coverage":
        covers = spec.get("covers")
        if not isinstance(covers, list) or not covers:
            raise SpecError("covers must be a non-empty list of item lists", f"{path}.covers")
        m = spec.get("m")
        items = [j for c in covers for j in c]
        if m is None:
            m = 1 + max(items, default=-1)
        if any(not 0 <= j < m for j in items):
            raise SpecError(f"covered items must lie in [0, {m})", f"{path}.covers")
        weights = spec.get("item_weights")
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if len(weights) != m or np.any(weights < 0):
                raise SpecError(f"item_weights must be {m} non-negative reals", f"{path}.item_weights")
        return Coverage(covers, weights, m, label)

    if kind == "metric_diversity":
        if "points" in spec:
            P = np.asarray(spec["points"], dtype=np.float64)
            if P.ndim == 1:
                P = P[:, None]
            D = np.sqrt(((P[:, None, :] - P[None, :, :]) ** 2).sum(-1))
        else:
            key = "matrix_csv" if "matrix_csv" in spec else "matrix"
            if key not in spec:
                raise SpecError("metric_diversity needs 'matrix', 'matrix_csv' or 'points'", path)
            D = _matrix(spec, key, path, base_dir)
            validate_distance_matrix(D, f"{path}.{key}")
        return MetricDiversity(D, label)

    if kind == "graph_cut":
        W = _matrix(spec, "weights", path, base_dir)
        _square_symmetric(W, f"{path}.weights", "cut weight matrix")
        return GraphCut(W, label)

    if kind == "sum":
        parts = spec.get("parts")
        if not isinstance(parts, list) or not parts:
            raise SpecError("sum needs a non-empty 'parts' list", f"{path}.parts")
        built = [_build(p, base_dir, f"{path}.parts[{i}]") for i, p in enumerate(parts)]
        _same_n(built, f"{path}.parts")
        return Sum(built, label)

    if kind == "product":
        factors = spec.get("factors")
        if not isinstance(factors, list) or len(factors) != 2:
            raise SpecError("product needs exactly two 'factors'", f"{path}.factors")
        built = [_build(p, base_dir, f"{path}.factors[{i}]") for i, p in enumerate(factors)]
        _same_n(built, f"{path}.factors")
        return Product(*built, label=label)

    if kind in ("card_scaled", "card_divided"):
        if "inner" not in spec:
            raise SpecError(f"{kind} needs an 'inner' spec", path)
        inner = _build(spec["inner"], base_dir, f"{path}.inner")
        return (CardScaled if kind == "card_scaled" else CardDivided)(inner, label)

    if kind == "table":
        values = np.asarray(spec.get("values", []), dtype=np.float64)
        n = spec.get("n")
        if n is None or not 1 <= n <= MAX_TABLE_N:
            raise SpecError(f"table needs 1 <= n <= {MAX_TABLE_N}", f"{path}.n")
        if values.shape != (1 << n,):
            raise SpecError(f"table with n={n} needs exactly {1 << n} values", f"{path}.values")
        if values[0] != 0:
            raise SpecError("table value at the empty set must be 0", f"{path}.values[0]")
        return Table(values, label)

    raise SpecError(f"unknown function type {kind!r}", f"{path}.type")


def _same_n(built, path):
    ns = {f.n for f in built}
    if len(ns) != 1:
        raise SpecError(f"parts disagree on ground-set size: {sorted(ns)}", path)


def load_spec(source, base_dir=None):
    """Accept a spec dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, dict):
        return source, base_dir
    text = str(source).lstrip()
    p = Path(source)
    if not text.startswith(("{", "[")) and (p.suffix == ".json" or p.exists()):
        try:
            text = p.read_text()
        except OSError as exc:
            raise SpecError(f"cannot read spec file {str(p)!r}: {exc}")
        try:
            return json.loads(text), p.parent
        except json.JSONDecodeError as exc:
            raise SpecError(f"{p}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    try:
        return json.loads(source), base_dir
    except json.JSONDecodeError as exc:
        raise SpecError(f"inline spec: line {exc.lineno} column {exc.colno}: {exc.msg}")


# ---------------------------------------------------------------------------
# Random instance generators (documented seeds are passed in by callers)


def random_line_metric(n, rng):
    x = np.sort(rng.uniform(0, 10, n))
    return {"type": "metric_diversity", "points": x.reshape(-1, 1).tolist()}


def random_plane_metric(n, rng):
    return {"type": "metric_diversity", "points": rng.uniform(0, 1, (n, 2)).tolist()}


def random_coverage(n, rng, m=None, p=0.35):
    m = m or 2 * n
    covers = []
    for _ in range(n):
        items = np.flatnonzero(rng.uniform(size=m) < p)
        if not len(items):
            items = [rng.integers(m)]
        covers.append([int(j) for j in items])
    return {"type": "coverage", "covers": covers, "m": m,
            "item_weights": rng.uniform(0.5, 2.0, m).round(6).tolist()}


def random_cut(n, rng, density=1.0):
    W = np.triu(rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < density), 1)
    return {"type": "graph_cut", "weights": (W + W.T).tolist()}


def random_modular(n, rng, low=0.0, high=1.0):
    return {"type": "modular", "weights": rng.uniform(low, high, n).tolist()}


def uniform_cut(n, weight):
    """Complete-graph cut with equal weights: ``weight * |S| * (n - |S|)``."""
    W = np.full((n, n), float(weight))
    np.fill_diagonal(W, 0.0)
    return {"type": "graph_cut", "weights": W.tolist()}


def random_prop_submod(n, rng, monotone=True):
    """A proportionally submodular instance.

    Monotone: coverage + metric diversity.  Non-monotone: adds
    ``c * |S| * (N - |S|)`` for ``n <= N < 1.5 n`` (a uniform cut plus a
    modular term), which is proportionally submodular and turns negative at
    large ``|S|``; the metric part is scaled down so the dip survives.
    """
    parts = [random_coverage(n, rng), random_plane_metric(n, rng)]
    if not monotone:
        c = rng.uniform(1.0, 3.0)
        extra = int(rng.integers(0, max(1, n // 2)))
        parts = [random_coverage(n, rng, p=0.2), _scaled_metric(random_plane_metric(n, rng), 0.3),
                 uniform_cut(n, c)]
        if extra:
            parts.append({"type": "modular", "weights": [c * extra] * n})
    return {"type": "sum", "parts": parts}


def _scaled_metric(spec, s):
    P = np.asarray(spec["points"]) * s
    return {"type": "metric_diversity", "points": P.tolist()}


def random_table(n, rng, monotone=False, scale=1.0):
    """Random non-negative table function; monotone tables accumulate positive increments."""
    N = 1 << n
    if not monotone:
        v = rng.uniform(0, scale, N)
        v[0] = 0.0
        return {"type": "table", "n": n, "values": v.tolist()}
    v = np.zeros(N)
    for mask in sorted(range(1, N), key=lambda m: m.bit_count()):
        subs = [mask & ~(1 << e) for e in range(n) if mask >> e & 1]
        v[mask] = max(v[s] for s in subs) + rng.uniform(0, scale)
    return {"type": "table", "n": n, "values": v.tolist()}


# ---------------------------------------------------------------------------
# Structural property checks


@dataclass
class CheckResult:
    holds: bool
    witness: dict | None = None
    exhaustive: bool = True
    checked: int = 0

    def __bool__(self):
        return self.holds


def _require(n, guard, samples):
    if n > guard and samples is None:
        raise CapacityError(
            f"exhaustive check needs n <= {guard}, got n={n}; pass samples=... for sampled mode")
    return n <= guard and samples is None


def _set(mask, n):
    return list(Subset(int(mask), n))


def check_monotone(f: SetFunction, samples=None, seed=0) -> CheckResult:
    """``f_S(e) >= -tol`` for every ``S`` and ``e`` not in ``S``."""
    n = f.n
    if not _require(n, MAX_CHECK_N, samples):
        rng = np.random.default_rng(seed)
        S = rng.integers(0, 1 << n, samples, dtype=np.int64)
        e = rng.integers(0, n, samples)
        S &= ~(np.int64(1) << e)
        base, up = f.evaluate_many(S), f.evaluate_many(S | (np.int64(1) << e))
        bad = np.flatnonzero(up - base < -tolerance(np.maximum(abs(base), abs(up))))
        if len(bad):
            i = bad[0]
            return CheckResult(False, {"S": _set(S[i], n), "e": int(e[i]),
                                       "marginal": float(up[i] - base[i])}, False, samples)
        return CheckResult(True, None, False, samples)
    t = f.table()
    rank = order_rank(n)
    masks = np.arange(1 << n, dtype=np.int64)
    best = None
    for e in range(n):
        bit = np.int64(1) << e
        S = masks[(masks & bit) == 0]
        gain = t[S | bit] - t[S]
        bad = S[gain < -tolerance(np.maximum(abs(t[S]), abs(t[S | bit])))]
        if len(bad):
            s = bad[np.argmin(rank[bad])]
            if best is None or (rank[s], e) < (rank[best[0]], best[1]):
                best = (int(s), e)
    if best is None:
        return CheckResult(True, None, True, n << (n - 1))
    s, e = best
    return CheckResult(False, {"S": _set(s, n), "e": e, "marginal": float(t[s | 1 << e] - t[s])},
                       True, n << (n - 1))


def check_submodular(f: SetFunction, samples=None, seed=0) -> CheckResult:
    """Diminishing returns ``f_A(e) >= f_B(e)`` for ``A`` inside ``B``, ``e`` outside ``B``.

    Checked through the equivalent local form with ``B = A + e'``; a failure
    is therefore reported as ``(A, B, e)`` with ``|B \\ A| = 1``.
    """
    n = f.n
    if n < 2:
        return CheckResult(True, None, True, 0)
    if not _require(n, MAX_CHECK_N, samples):
        rng = np.random.default_rng(seed)
        A = rng.integers(0, 1 << n, samples, dtype=np.int64)
        pairs = np.array([rng.choice(n, 2, replace=False) for _ in range(samples)])
        e, e2 = pairs[:, 0], pairs[:, 1]
        A &= ~((np.int64(1) << e) | (np.int64(1) << e2))
        B = A | (np.int64(1) << e2)
        dA = f.evaluate_many(A | (np.int64(1) << e)) - f.evaluate_many(A)
        dB = f.evaluate_many(B | (np.int64(1) << e)) - f.evaluate_many(B)
        bad = np.flatnonzero(dA < dB - tolerance(np.maximum(abs(dA), abs(dB)) + 1.0))
        if len(bad):
            i = bad[0]
            return CheckResult(False, {"A": _set(A[i], n), "B": _set(B[i], n), "e": int(e[i]),
                                       "gain_A": float(dA[i]), "gain_B": float(dB[i])}, False, samples)
        return CheckResult(True, None, False, samples)
    t = f.table()
    rank = order_rank(n)
    masks = np.arange(1 << n, dtype=np.int64)
    scale = np.abs(t).max() if len(t) else 0.0
    best = None
    checked = 0
    for e in range(n):
        for e2 in range(n):
            if e == e2:
                continue
            b1, b2 = np.int64(1) << e, np.int64(1) << e2
            A = masks[(masks & (b1 | b2)) == 0]
            checked += len(A)
            gA = t[A | b1] - t[A]
            gB = t[A | b1 | b2] - t[A | b2]
            bad = A[gA < gB - tolerance(scale)]
            if len(bad):
                a = bad[np.argmin(rank[bad])]
                key = (rank[a], rank[a | b2], e)
                if best is None or key < best[0]:
                    best = (key, int(a), int(a | b2), e)
    if best is None:
        return CheckResult(True, None, True, checked)
    _, a, b, e = best
    return CheckResult(False, {"A": _set(a, n), "B": _set(b, n), "e": e,
                               "gain_A": float(t[a | 1 << e] - t[a]),
                               "gain_B": float(t[b | 1 << e] - t[b])}, True, checked)


def proportional_gap(t, S, T):
    """``|S| f(T) + |T| f(S) - |S&T| f(S|T) - |S|T| f(S&T)`` for mask arrays."""
    S, T = np.asarray(S), np.asarray(T)
    I, U = S & T, S | T
    return (popcount(S) * t[T] + popcount(T) * t[S]
            - popcount(I) * t[U] - popcount(U) * t[I])


def check_proportionally_submodular(f: SetFunction, samples=None, seed=0) -> CheckResult:
    """Check ``|S|f(T) + |T|f(S) >= |S&T|f(S|T) + |S|T|f(S&T)`` on all ordered pairs."""
    n = f.n
    if not _require(n, MAX_PAIR_CHECK_N, samples):
        rng = np.random.default_rng(seed)
        S = rng.integers(0, 1 << n, samples, dtype=np.int64)
        T = rng.integers(0, 1 << n, samples, dtype=np.int64)
        vals = {}
        masks = np.unique(np.concatenate([S, T, S & T, S | T]))
        for m, v in zip(masks, f.evaluate_many(masks)):
            vals[int(m)] = v
        t = np.vectorize(vals.get, otypes=[float])
        gap = (popcount(S) * t(T) + popcount(T) * t(S)
               - popcount(S & T) * t(S | T) - popcount(S | T) * t(S & T))
        scale = n * max(abs(v) for v in vals.values())
        bad = np.flatnonzero(gap < -tolerance(scale))
        if len(bad):
            i = bad[0]
            return CheckResult(False, {"S": _set(S[i], n), "T": _set(T[i], n),
                                       "gap": float(gap[i])}, False, samples)
        return CheckResult(True, None, False, samples)
    t = f.table()
    rank = order_rank(n)
    order = np.argsort(rank)  # masks in enumeration order
    slack = tolerance(n * np.abs(t).max())
    for S in order:
        gap = proportional_gap(t, np.full(len(order), S, dtype=np.int64), order)
        bad = np.flatnonzero(gap < -slack)
        if len(bad):
            T = order[bad[0]]
            return CheckResult(False, {"S": _set(S, n), "T": _set(T, n), "gap": float(gap[bad[0]])},
                               True, int(rank[S] + 1) * len(order))
    return CheckResult(True, None, True, len(order) ** 2)
