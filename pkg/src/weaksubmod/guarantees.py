"""Closed-form approximation factors for the randomized greedy algorithm.

Every function here is pure and cheap; the long sums behind the asymptotic
constants are vectorized so that ``k = 10**5`` evaluates in milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError

# Quality of a k/2-step greedy warm start on a monotone submodular function.
WARM_START_ALPHA = 1.0 - math.exp(-0.5)

G_FAMILIES = ("submodular", "submod_plus_metric", "prop_submod")


@dataclass
class GammaProfile:
    """Per-iteration ratios ``gamma[i]`` for ``i = 0..k-1``."""

    gamma: np.ndarray
    flags: list = field(default_factory=list)  # indices defaulted to 1 (no positive pair)
    raw: np.ndarray | None = None  # unclipped minima, nan where undefined
    negative_witness: dict | None = None  # first pair with joint < 0 and sum < joint

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        if self.gamma.ndim != 1 or len(self.gamma) < 1:
            raise ContractError("a gamma profile needs at least one entry")
        if np.any(self.gamma < 0) or np.any(self.gamma > 1):
            raise ContractError("gamma profile entries must lie in [0, 1]")

    @property
    def k(self) -> int:
        return len(self.gamma)

    def to_dict(self):
        return {"gamma": self.gamma.tolist(), "defaulted": list(self.flags),
                "raw": None if self.raw is None else [None if np.isnan(x) else float(x) for x in self.raw],
                "negative_witness": self.negative_witness}


@dataclass
class BoundParams:
    """Per-iteration parameters of the general non-monotone guarantee.

    ``alpha[i]``, ``beta[i]`` are indexed ``i = 0..k-1``; ``alpha_bar[j-1]``,
    ``beta_bar[j-1]`` hold the values for ``j = 1..k``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    alpha_bar: np.ndarray
    beta_bar: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "alpha_bar", "beta_bar"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    @property
    def k(self) -> int:
        return len(self.alpha)

    @classmethod
    def uniform(cls, k, alpha, beta, alpha_bar=None, beta_bar=None):
        alpha_bar = alpha if alpha_bar is None else alpha_bar
        beta_bar = beta if beta_bar is None else beta_bar
        return cls(np.full(k, alpha), np.full(k, beta), np.full(k, alpha_bar), np.full(k, beta_bar))

    def validate(self, k, tol=1e-12):
        for name in ("alpha", "beta", "alpha_bar", "beta_bar"):
            v = getattr(self, name)
            if v.shape != (k,):
                raise ContractError(f"{name} must have length k={k}, got {v.shape}")
        for lo, hi in (("alpha", "beta"), ("alpha_bar", "beta_bar")):
            a, b = getattr(self, lo), getattr(self, hi)
            bad = np.flatnonzero((a < -tol) | (a > b + tol) | (b > k + tol))
            if len(bad):
                i = int(bad[0])
                raise ContractError(
                    f"need 0 <= {lo} <= {hi} <= k at index {i}: got {lo}={a[i]:.6g}, {hi}={b[i]:.6g}, k={k}")
        return self

    def to_dict(self):
        return {n: getattr(self, n).tolist() for n in ("alpha", "beta", "alpha_bar", "beta_bar")}


def _as_profile(profile, k):
    g = profile.gamma if isinstance(profile, GammaProfile) else np.asarray(profile, dtype=np.float64)
    if len(g) != k:
        raise ContractError(f"profile has length {len(g)}, expected k={k}")
    if np.any(g < 0) or np.any(g > 1):
        raise ContractError("profile entries must lie in [0, 1]")
    return g


def factor_monotone(profile, k):
    """Return ``(exact, exp_form)`` lower bounds on ``E[f(S_k)] / f(OPT)`` for monotone ``f``.

    ``exact = 1 - prod(1 - gamma_j / k)`` and ``exp_form = 1 - exp(-sum(gamma_j) / k)``.
    """
    g = _as_profile(profile, k)
    exact = 1.0 - float(np.prod(1.0 - g / k))
    exp_form = 1.0 - math.exp(-float(g.sum()) / k)
    return exact, exp_form


def factor_monotone_warm(profile_tail, k, s0_ratio=0.0):
    """Monotone guarantee when the run starts from ``S_0`` with ``f(S_0) = s0_ratio * f(OPT)``.

    ``profile_tail`` lists ``gamma_j`` for ``j = |S_0|..k-1``.
    """
    g = np.asarray(profile_tail, dtype=np.float64)
    p = float(np.prod(1.0 - g / k))
    return 1.0 - p + p * s0_ratio


def factor_general(params: BoundParams, k, i=None):
    """``prod_{j=1}^{i-1} min(1 - beta_bar_j/k, 1 - alpha_j/k) * sum_{j=0}^{i-1} alpha_j/k``."""
    params.validate(k)
    i = k if i is None else i
    if not 1 <= i <= k:
        raise ContractError(f"iteration i={i} outside [1, {k}]")
    j = np.arange(1, i)
    prod = np.prod(np.minimum(1.0 - params.beta_bar[j - 1] / k, 1.0 - params.alpha[j] / k))
    return float(prod * params.alpha[:i].sum() / k)


def _check_gamma(gamma):
    if not 0.0 < gamma <= 1.0:
        raise ContractError(f"gamma must lie in (0, 1], got {gamma}")


def factor_weak(gamma, k):
    """``gamma (1 - 1/(gamma k))^(k-1)`` for gamma-weakly submodular functions.

    When ``gamma * k < 1`` the parameter ``1/gamma`` exceeds ``k`` and no
    guarantee follows, so 0 is returned.
    """
    _check_gamma(gamma)
    if gamma * k < 1:
        return 0.0
    return factor_general(BoundParams.uniform(k, gamma, 1.0 / gamma), k)


def factor_pseudo(gamma, k):
    """``gamma (1 - gamma/k)^(k-1)`` for gamma-pseudo submodular functions."""
    _check_gamma(gamma)
    return factor_general(BoundParams.uniform(k, gamma, gamma), k)


def factor_weak_asymptotic(gamma):
    _check_gamma(gamma)
    return gamma * math.exp(-1.0 / gamma)


def factor_pseudo_asymptotic(gamma):
    _check_gamma(gamma)
    return gamma * math.exp(-gamma)


def factor_nonmonotone_profile(profile, k):
    """``sum(gamma_i) / (e k)``."""
    g = _as_profile(profile, k)
    return float(g.sum()) / (math.e * k)


# ---------------------------------------------------------------------------
# Per-iteration ratio sequences used by the asymptotic constants


def prop_submod_terms(k, i=None):
    """``3i(1+i) / (3i^2 + 3ik + k^2 - 1)`` for ``i = 0..k-1`` (0 at ``i = 0``)."""
    i = np.arange(k, dtype=np.float64) if i is None else np.asarray(i, dtype=np.float64)
    return 3 * i * (1 + i) / (3 * i * i + 3 * i * k + k * k - 1.0)


def metric_terms(k):
    """``i / (i + k - 1)`` for ``i = 0..k-1``."""
    i = np.arange(k, dtype=np.float64)
    return i / (i + k - 1.0)


def card_sum_terms(k):
    """``(i + 1) / (i + k)`` for ``i = 0..k-1``."""
    i = np.arange(k, dtype=np.float64)
    return (i + 1) / (i + k)


def limit_prop_submod_factor(k):
    """Monotone guarantee for proportionally submodular functions at budget ``k``."""
    if k < 2:
        raise ContractError(f"need k >= 2, got {k}")
    return 1.0 - math.exp(-float(prop_submod_terms(k).sum()) / k)


def factor_product_pipeline(g_family, k, warm_size=None):
    """Guarantee for ``f * g`` with a greedy warm start of ``warm_size`` (default ``k/2``) elements.

    ``1 - exp(-(1/k) sum_{i=s}^{k-1} r * gamma_i^g)`` with
    ``r = alpha / (1 + alpha)`` and ``alpha = 1 - exp(-s/k)``.
    """
    if g_family not in G_FAMILIES:
        raise ContractError(f"unknown g family {g_family!r}; expected one of {', '.join(G_FAMILIES)}")
    if warm_size is None:
        if k % 2:
            raise ContractError(f"the k/2 warm start needs an even budget, got k={k}")
        warm_size = k // 2
    if not 1 <= warm_size < k:
        raise ContractError(f"warm_size={warm_size} must lie in [1, k-1]")
    alpha = 1.0 - math.exp(-warm_size / k)
    r = claim_warm_start_ratio(alpha, "submodular")
    if g_family == "submodular":
        terms = np.ones(k)
    elif g_family == "submod_plus_metric":
        terms = metric_terms(k)
    else:
        terms = prop_submod_terms(k)
    return 1.0 - math.exp(-r * float(terms[warm_size:].sum()) / k)


def factor_baselines():
    """Guarantees of ``S_f | S_g`` (two k/2 greedy runs) for the three product families."""
    a = WARM_START_ALPHA
    return a * a, a / 8.0, a * 0.05


BASELINE_BY_FAMILY = dict(zip(G_FAMILIES, range(3)))


def factor_partial_dummy(k, m, gamma_bar):
    """``((k - m) gbar_1 + sum_{i<m} gbar_i) / (k e)`` when ``m`` originals are picked."""
    if not 1 <= m <= k:
        raise ContractError(f"need 1 <= m <= k, got m={m}, k={k}")
    g = np.asarray(gamma_bar, dtype=np.float64)
    if len(g) < max(m, 2):
        raise ContractError(f"gamma_bar needs at least {max(m, 2)} entries, got {len(g)}")
    if np.any(g < 0) or np.any(g > 1):
        raise ContractError("gamma_bar entries must lie in [0, 1]")
    if np.any(np.diff(g) < 0):
        i = int(np.flatnonzero(np.diff(g) < 0)[0])
        raise ContractError(f"gamma_bar must be non-decreasing; drops at index {i + 1}")
    return ((k - m) * g[1] + float(g[:m].sum())) / (k * math.e)


def claim_warm_start_ratio(alpha, family):
    """Lower bound on ``f(A) / f(A | B)`` once ``A`` contains an ``alpha``-approximate set."""
    if not 0.0 < alpha <= 1.0:
        raise ContractError(f"alpha must lie in (0, 1], got {alpha}")
    if family == "submodular":
        return alpha / (1.0 + alpha)
    if family == "metric_diversity":
        return alpha / (5.0 + alpha)
    raise ContractError(f"unknown family {family!r}; expected 'submodular' or 'metric_diversity'")
