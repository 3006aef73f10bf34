"""Ground sets, bit-indexed subsets and the set-function oracle contract.

Every set function in the package is a :class:`SetFunction`.  Subclasses
implement ``_batch``, which evaluates a stack of 0/1 membership rows at
once; single evaluations, marginals and full value tables are all routed
through it so that the query counter sees every call.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

# Exhaustive enumeration is refused above this many elements.
MAX_ENUMERATION_N = 24
# Value tables are built in chunks of this many rows.
_TABLE_CHUNK = 1 << 15

REL_TOL = 1e-9
ABS_TOL = 1e-12


class ContractError(ValueError):
    """Raised when an operation is called outside its documented contract."""


class CapacityError(ContractError):
    """Raised when exhaustive enumeration would explode."""


def close_enough(x: float, y: float, rel: float = REL_TOL, abs_floor: float = ABS_TOL) -> bool:
    return abs(x - y) <= max(abs_floor, rel * max(abs(x), abs(y)))


def tolerance(scale) -> np.ndarray | float:
    """Absolute slack allowed when comparing quantities of magnitude ``scale``."""
    return np.maximum(ABS_TOL, REL_TOL * np.abs(scale))


@dataclass(frozen=True)
class GroundSet:
    """Original elements ``0..n_original-1`` followed by ``n_dummy`` dummies."""

    n_original: int
    n_dummy: int = 0

    def __post_init__(self):
        if self.n_original < 1:
            raise ContractError("a ground set needs at least one original element")
        if self.n_dummy < 0:
            raise ContractError("n_dummy must be non-negative")

    @property
    def n_total(self) -> int:
        return self.n_original + self.n_dummy

    def is_dummy(self, e: int) -> bool:
        return e >= self.n_original

    @property
    def originals_mask(self) -> int:
        return (1 << self.n_original) - 1


@dataclass(frozen=True, order=True)
class Subset:
    """A subset of ``{0, ..., capacity-1}`` stored as a Python int bitmask."""

    bits: int
    capacity: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.capacity:
            raise ContractError(f"bits {self.bits:#x} exceed capacity {self.capacity}")

    @classmethod
    def of(cls, members: Iterable[int], capacity: int) -> "Subset":
        bits = 0
        for e in members:
            e = int(e)
            if not 0 <= e < capacity:
                raise ContractError(f"element {e} outside capacity {capacity}")
            bits |= 1 << e
        return cls(bits, capacity)

    @classmethod
    def empty(cls, capacity: int) -> "Subset":
        return cls(0, capacity)

    @classmethod
    def full(cls, capacity: int) -> "Subset":
        return cls((1 << capacity) - 1, capacity)

    def __iter__(self) -> Iterator[int]:
        bits, e = self.bits, 0
        while bits:
            if bits & 1:
                yield e
            bits >>= 1
            e += 1

    def members(self) -> tuple[int, ...]:
        return tuple(self)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, e: int) -> bool:
        return 0 <= e < self.capacity and bool(self.bits >> e & 1)

    def _check(self, other: "Subset"):
        if self.capacity != other.capacity:
            raise ContractError(f"capacity mismatch: {self.capacity} vs {other.capacity}")

    def __or__(self, other: "Subset") -> "Subset":
        self._check(other)
        return Subset(self.bits | other.bits, self.capacity)

    def __and__(self, other: "Subset") -> "Subset":
        self._check(other)
        return Subset(self.bits & other.bits, self.capacity)

    def __sub__(self, other: "Subset") -> "Subset":
        self._check(other)
        return Subset(self.bits & ~other.bits, self.capacity)

    union = __or__
    intersection = __and__
    difference = __sub__

    def add(self, e: int) -> "Subset":
        if not 0 <= e < self.capacity:
            raise ContractError(f"element {e} outside capacity {self.capacity}")
        return Subset(self.bits | 1 << e, self.capacity)

    def isdisjoint(self, other: "Subset") -> bool:
        self._check(other)
        return not self.bits & other.bits

    def resized(self, capacity: int) -> "Subset":
        return Subset(self.bits, capacity)

    def __repr__(self) -> str:
        return "{" + ", ".join(map(str, self)) + "}"


def as_subset(S, capacity: int) -> Subset:
    if isinstance(S, Subset):
        if S.bits >> capacity:
            raise ContractError(f"subset {S!r} exceeds capacity {capacity}")
        return S if S.capacity == capacity else Subset(S.bits, capacity)
    return Subset.of(S, capacity)


def membership_matrix(masks, n: int) -> np.ndarray:
    """Rows of 0/1 floats, one per bitmask, columns ``0..n-1``."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.float64)


def popcount(masks) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


class QueryCounter:
    """Thread-safe count of oracle evaluations."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def add(self, n: int = 1):
        with self._lock:
            self._count += n

    def reset(self):
        with self._lock:
            self._count = 0


class SetFunction:
    """Base class for normalized set functions ``f: 2^E -> R``.

    Subclasses set ``n`` (number of original elements) and implement
    ``_batch(X)`` for a float matrix ``X`` of shape ``(m, n)`` whose rows are
    0/1 membership vectors.
    """

    n: int
    label: str = ""

    def __init__(self, n: int, label: str = ""):
        if n < 1:
            raise ContractError("set functions need n >= 1")
        self.n = int(n)
        self.label = label or type(self).__name__
        self.counter = QueryCounter()

    @property
    def capacity(self) -> int:
        return self.n

    @property
    def queries(self) -> int:
        return self.counter.count

    def _batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        self.counter.add(len(masks))
        return np.asarray(self._batch(membership_matrix(masks, self.n)), dtype=np.float64)

    def evaluate(self, S) -> float:
        S = as_subset(S, self.capacity)
        return float(self._values([S.bits])[0])

    __call__ = evaluate

    def evaluate_many(self, masks) -> np.ndarray:
        """Evaluate a batch of bitmasks (one query each)."""
        return self._values(masks)

    def table(self) -> np.ndarray:
        """All ``2^n`` values indexed by bitmask."""
        if self.n > MAX_ENUMERATION_N:
            raise CapacityError(f"n={self.n} is too large for a full value table; use sampled mode")
        N = 1 << self.n
        out = np.empty(N, dtype=np.float64)
        for lo in range(0, N, _TABLE_CHUNK):
            hi = min(N, lo + _TABLE_CHUNK)
            out[lo:hi] = self._values(np.arange(lo, hi, dtype=np.int64))
        return out

    def marginal(self, A, B) -> float:
        return marginal(self, A, B)

    def check_normalized(self):
        v = self.evaluate(Subset.empty(self.capacity))
        if v != 0.0:
            raise ContractError(f"{self.label}: f(empty) = {v!r}, expected exactly 0")
        return self

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.label!r} n={self.n}>"


class CallableFunction(SetFunction):
    """Wrap a plain Python callable ``fn(frozenset) -> float``."""

    def __init__(self, fn, n: int, label: str = ""):
        super().__init__(n, label or getattr(fn, "__name__", "callable"))
        self._fn = fn
        self.check_normalized()

    def _batch(self, X):
        return np.array([float(self._fn(frozenset(np.flatnonzero(row).tolist()))) for row in X])


class DummyAugmentedOracle(SetFunction):
    """``inner`` extended with ``2k`` dummy elements of zero marginal value."""

    def __init__(self, inner: SetFunction, k: int):
        if k < 1:
            raise ContractError(f"invalid budget k={k}")
        super().__init__(inner.n, f"{inner.label}+{2 * k} dummies")
        self.inner = inner
        self.k = int(k)
        self.ground = GroundSet(inner.n, 2 * self.k)

    @property
    def capacity(self) -> int:
        return self.ground.n_total

    def is_dummy(self, e: int) -> bool:
        return self.ground.is_dummy(e)

    def _values(self, masks):
        masks = np.asarray(masks, dtype=np.int64) & self.ground.originals_mask
        self.counter.add(len(masks))
        return self.inner._values(masks)

    def originals(self, S: Subset) -> Subset:
        return Subset(S.bits & self.ground.originals_mask, self.inner.n)

    def table(self):
        raise ContractError("value tables are only defined on the original ground set")


def augment_with_dummies(f: SetFunction, k: int) -> DummyAugmentedOracle:
    return DummyAugmentedOracle(f, k)


def marginal(f: SetFunction, A, B) -> float:
    """``f(A | B) - f(A)`` for disjoint ``A`` and ``B``."""
    A = as_subset(A, f.capacity)
    B = as_subset(B, f.capacity)
    if not A.isdisjoint(B):
        raise ContractError(f"marginal needs disjoint sets, got A={A!r}, B={B!r}")
    if not B.bits:
        return 0.0
    base, joint = f._values([A.bits, A.bits | B.bits])
    return float(joint - base)


def _check_enumeration(n: int, max_size: int | None):
    if n > MAX_ENUMERATION_N:
        raise CapacityError(
            f"refusing to enumerate subsets of n={n} > {MAX_ENUMERATION_N} elements; "
            "use sampled mode instead")
    if max_size is None:
        max_size = n
    if not 0 <= max_size <= n:
        raise ContractError(f"max_size={max_size} must lie in [0, {n}]")
    return max_size


def masks_in_order(n: int, max_size: int | None = None) -> np.ndarray:
    """Bitmasks of all subsets of size <= max_size, by size then lexicographic order."""
    max_size = _check_enumeration(n, max_size)
    out = []
    for size in range(max_size + 1):
        for combo in itertools.combinations(range(n), size):
            out.append(sum(1 << e for e in combo))
    return np.array(out, dtype=np.int64)


def enumerate_subsets(n: int, max_size: int | None = None) -> Iterator[Subset]:
    """Yield each subset of ``{0..n-1}`` with at most ``max_size`` elements once.

    Order: by cardinality, then lexicographically on the sorted member tuple.
    """
    max_size = _check_enumeration(n, max_size)
    for size in range(max_size + 1):
        for combo in itertools.combinations(range(n), size):
            yield Subset.of(combo, n)


def order_rank(n: int) -> np.ndarray:
    """``rank[mask]`` gives the position of ``mask`` in :func:`masks_in_order`."""
    order = masks_in_order(n)
    rank = np.empty(1 << n, dtype=np.int64)
    rank[order] = np.arange(len(order))
    return rank
