"""Greedy maximizers under a cardinality constraint, plus exact and sampled expectations.

The randomized greedy works on the function extended with ``2k`` dummy
elements.  In every iteration the ``k`` candidates of largest marginal gain
form ``M``; ties are broken by preferring originals over dummies and then by
ascending id, so ``M`` is a deterministic function of the current set.  One
member of ``M`` is then drawn uniformly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import (
    ContractError,
    DummyAugmentedOracle,
    SetFunction,
    Subset,
    as_subset,
    masks_in_order,
)

# Rows evaluated per batch by the brute-force search.
_OPT_CHUNK = 1 << 14


@dataclass
class IterationRecord:
    candidates: list  # M_i, in ranking order
    marginals: list  # f_{S_{i-1}}(e) for e in candidates
    chosen: int
    value: float  # f(S_i)


@dataclass
class GreedyTrace:
    k: int
    seed: int | None
    n_original: int
    initial: list
    iterations: list = field(default_factory=list)
    final_set: list = field(default_factory=list)
    final_value: float = 0.0
    queries: int = 0

    def to_dict(self):
        return asdict(self)

    @property
    def chosen_dummies(self) -> int:
        return sum(1 for it in self.iterations if it.chosen >= self.n_original)


@dataclass
class RunResult:
    set: list
    value: float
    queries: int

    def to_dict(self):
        return asdict(self)


def _rank_candidates(aug: DummyAugmentedOracle, S: int):
    """Return ``(ids, marginals, base)`` for all elements outside ``S``, best first."""
    cap = aug.capacity
    ids = np.array([e for e in range(cap) if not S >> e & 1], dtype=np.int64)
    vals = aug.evaluate_many(np.concatenate([[S], S | (np.int64(1) << ids)]))
    base, marg = vals[0], vals[1:] - vals[0]
    is_dummy = ids >= aug.ground.n_original
    order = np.lexsort((ids, is_dummy, -marg))
    return ids[order], marg[order], base


def _check_initial(f: SetFunction, k: int, initial):
    if k < 1:
        raise ContractError(f"invalid budget k={k}")
    if initial is None:
        return 0
    if isinstance(initial, Subset) and initial.bits >> f.n:
        raise ContractError(f"initial set {initial!r} contains dummy elements")
    try:
        init = as_subset(initial, f.n)
    except ContractError as exc:
        raise ContractError(f"initial set must contain only original elements: {exc}")
    if len(init) >= k:
        raise ContractError(f"initial set has {len(init)} elements; it must have fewer than k={k}")
    return init.bits


def randomized_greedy(f: SetFunction, k: int, seed=0, initial=None) -> GreedyTrace:
    """One run of the dummy-augmented randomized greedy for ``k - |initial|`` iterations."""
    S = _check_initial(f, k, initial)
    aug = DummyAugmentedOracle(f, k)
    rng = np.random.default_rng(seed)
    trace = GreedyTrace(k=k, seed=seed, n_original=f.n, initial=list(Subset(S, f.n)))
    for _ in range(k - S.bit_count()):
        ids, marg, _ = _rank_candidates(aug, S)
        M, gains = ids[:k], marg[:k]
        pick = int(rng.integers(k))
        e = int(M[pick])
        S |= 1 << e
        value = aug.evaluate(Subset(S, aug.capacity))
        trace.iterations.append(IterationRecord(M.tolist(), gains.tolist(), e, value))
    final = Subset(S & aug.ground.originals_mask, f.n)
    trace.final_set = list(final)
    trace.final_value = f.evaluate(final)
    trace.queries = aug.queries
    return trace


def deterministic_greedy(f: SetFunction, k: int) -> RunResult:
    """Classic greedy on the originals: argmax marginal (lowest id on ties), stop on a negative best."""
    if k < 1:
        raise ContractError(f"invalid budget k={k}")
    start = f.queries
    S = 0
    base = f.evaluate(Subset(0, f.n))
    for _ in range(min(k, f.n)):
        ids = np.array([e for e in range(f.n) if not S >> e & 1], dtype=np.int64)
        vals = f.evaluate_many(S | (np.int64(1) << ids))
        best = int(np.argmax(vals - base))
        if vals[best] - base < 0:
            break
        S |= 1 << int(ids[best])
        base = float(vals[best])
    return RunResult(list(Subset(S, f.n)), base, f.queries - start)


def brute_force_opt(f: SetFunction, k: int) -> RunResult:
    """Exact maximizer over all sets of size at most ``k`` (first in enumeration order on ties)."""
    if k < 1:
        raise ContractError(f"invalid budget k={k}")
    start = f.queries
    masks = masks_in_order(f.n, min(k, f.n))
    best_val, best_mask = -math.inf, 0
    for lo in range(0, len(masks), _OPT_CHUNK):
        chunk = masks[lo:lo + _OPT_CHUNK]
        vals = f.evaluate_many(chunk)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_mask = float(vals[i]), int(chunk[i])
    return RunResult(list(Subset(best_mask, f.n)), best_val, f.queries - start)


# ---------------------------------------------------------------------------
# Exact expectation by branching over every uniform draw


@dataclass
class StepStates:
    """Distribution over ``S_{i-1}`` together with the candidate set each state produces."""

    masks: list  # S_{i-1} over the augmented ground set
    probs: list
    candidates: list  # M_i for each state
    marginals: list


@dataclass
class ExpectationResult:
    k: int
    exact_expected_value: float
    num_leaves: int
    num_states: list  # distinct states after each iteration
    expected_values: list  # E[f(S_i)], i = 0..t
    expected_with_reference: list | None  # E[f(S_i | R)], i = 0..t
    steps: list = field(default_factory=list, repr=False)
    n_original: int = 0

    def to_dict(self):
        return {k: v for k, v in vars(self).items() if k != "steps"}


def exact_expectation(f: SetFunction, k: int, reference=None, initial=None, merge=True,
                      keep_steps=False) -> ExpectationResult:
    """Exact ``E[f(S_i)]`` for every iteration of the randomized greedy.

    Each uniform draw branches with probability ``1/k``.  With ``merge`` the
    branches are collapsed on the current set, which is exact because the
    next candidate set depends only on it; ``merge=False`` keeps every path.
    """
    S0 = _check_initial(f, k, initial)
    if k > 6:
        raise ContractError(f"exact expectation is limited to k <= 6, got k={k}")
    aug = DummyAugmentedOracle(f, k)
    R = None if reference is None else as_subset(reference, f.n).bits

    def values(masks):
        return aug.evaluate_many(np.asarray(masks, dtype=np.int64))

    states = [(S0, 1.0)]
    exp_vals = [float(values([S0])[0])]
    exp_ref = None if R is None else [float(values([S0 | R])[0])]
    num_states, steps = [1], []
    t = k - S0.bit_count()
    memo = {}
    for _ in range(t):
        nxt = {} if merge else []
        step = StepStates([], [], [], [])
        for S, p in states:
            if S not in memo:
                ids, marg, _ = _rank_candidates(aug, S)
                memo[S] = (ids[:k], marg[:k])
            M, gains = memo[S]
            if keep_steps:
                step.masks.append(S)
                step.probs.append(p)
                step.candidates.append(M.tolist())
                step.marginals.append(gains.tolist())
            q = p / k
            for e in M:
                child = S | 1 << int(e)
                if merge:
                    nxt[child] = nxt.get(child, 0.0) + q
                else:
                    nxt.append((child, q))
        states = sorted(nxt.items()) if merge else nxt
        if keep_steps:
            steps.append(step)
        masks = [s for s, _ in states]
        probs = np.array([p for _, p in states])
        exp_vals.append(float(probs @ values(masks)))
        if R is not None:
            exp_ref.append(float(probs @ values([s | R for s in masks])))
        num_states.append(len(states))
    return ExpectationResult(k=k, exact_expected_value=exp_vals[-1], num_leaves=k ** t,
                             num_states=num_states, expected_values=exp_vals,
                             expected_with_reference=exp_ref, steps=steps, n_original=f.n)


# ---------------------------------------------------------------------------
# Monte Carlo


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed: numpy's SeedSequence hash of ``(seed, trial)`` as a 64-bit integer."""
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return int(ss.generate_state(1, np.uint64)[0])


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("WEAKSUBMOD_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass
class MonteCarloResult:
    mean: float
    stderr: float
    min: float
    max: float
    trials: int
    values: list = field(repr=False, default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d.pop("values")
        return d


def monte_carlo_expectation(f: SetFunction, k: int, trials: int, seed=0, initial=None,
                            workers=None) -> MonteCarloResult:
    """Sample mean and standard error of the randomized greedy's final value."""
    if trials < 1:
        raise ContractError(f"need at least one trial, got {trials}")
    workers = workers or worker_count()

    def run(t):
        return randomized_greedy(f, k, trial_seed(seed, t), initial).final_value

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = np.array(list(pool.map(run, range(trials))))
    else:
        vals = np.array([run(t) for t in range(trials)])
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloResult(float(vals.mean()), stderr, float(vals.min()), float(vals.max()),
                            trials, vals.tolist())


# ---------------------------------------------------------------------------
# Post-hoc checks of the per-iteration contract


def check_trace(f: SetFunction, trace: GreedyTrace, opt=None, tol=1e-9):
    """Return a list of violated per-iteration properties (empty when all hold).

    Checks ``|M_i| = k``, ``e_i`` in ``M_i``, a non-negative chosen marginal,
    non-decreasing values and, given ``opt``, that the candidate marginals
    sum to at least the marginals of ``opt``.
    """
    k = trace.k
    aug = DummyAugmentedOracle(f, k)
    problems = []
    S = sum(1 << e for e in trace.initial)
    prev = f.evaluate(Subset(S, f.n))
    for i, it in enumerate(trace.iterations, 1):
        if len(it.candidates) != k or len(set(it.candidates)) != k:
            problems.append((i, "candidate set does not have k distinct elements"))
        if it.chosen not in it.candidates:
            problems.append((i, "chosen element outside the candidate set"))
        gain = it.marginals[it.candidates.index(it.chosen)] if it.chosen in it.candidates else -1
        if gain < -tol:
            problems.append((i, f"chosen marginal {gain:.3g} is negative"))
        if it.value < prev - tol * max(1.0, abs(prev)):
            problems.append((i, f"value decreased from {prev:.6g} to {it.value:.6g}"))
        if opt is not None:
            o = [e for e in opt if not S >> e & 1]
            vals = aug.evaluate_many(np.array([S] + [S | 1 << e for e in o], dtype=np.int64))
            opt_sum = float((vals[1:] - vals[0]).sum())
            if sum(it.marginals) < opt_sum - tol * max(1.0, abs(opt_sum)):
                problems.append((i, f"candidate marginals {sum(it.marginals):.6g} < OPT marginals {opt_sum:.6g}"))
        S |= 1 << it.chosen
        prev = it.value
    return problems
