"""Exact infection probabilities for small clusters via the embedded CTMC.

For a fixed allocation the epidemic is a continuous-time Markov chain on the
2^n subsets of infected individuals, moving only by adding one individual at
the hazard the model assigns to them. Transient marginals come from the
matrix exponential of the generator (scaling-and-squaring via scipy), with an
independently coded fixed-step RK4 integration of the forward equations as a
second route for cross-checks. On top of the marginals sit the exact
design-averaged potential outcomes and direct effects that the Monte Carlo
estimators are validated against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import Cluster, ModelParams
from .randomization import DesignSpec, conditional_pmf_others

MAX_EXACT_N = 12
MAX_AVERAGE_N = 10
MAX_DECOMPOSE_N = 8

_NEG_TOL = 1e-12
_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CtmcSpec:
    """Generator of the subset-valued infection chain for one allocation."""

    n: int
    generator: np.ndarray

    def __post_init__(self) -> None:
        if self.n > MAX_EXACT_N:
            raise ValueError(f"exact computation limited to n <= {MAX_EXACT_N}")
        q = self.generator
        if q.shape != (1 << self.n, 1 << self.n):
            raise ValueError("generator has wrong shape")


def build_ctmc(params: ModelParams, cluster: Cluster) -> CtmcSpec:
    """Rate matrix over bitmask states; state s -> s|bit(j) at hazard of j."""
    n = cluster.size
    if n > MAX_EXACT_N:
        raise ValueError(f"exact computation limited to n <= {MAX_EXACT_N}, got {n}")
    x = cluster.treatment
    sus_w = np.exp(params.beta * x + cluster.eta)
    inf_w = np.exp(params.gamma * x + cluster.xi)
    size = 1 << n
    q = np.zeros((size, size))
    for s in range(size - 1):
        pressure = params.alpha
        for k in range(n):
            if s >> k & 1:
                pressure += inf_w[k]
        diag = 0.0
        for j in range(n):
            if not s >> j & 1:
                rate = sus_w[j] * pressure
                q[s, s | 1 << j] = rate
                diag += rate
        q[s, s] = -diag
    return CtmcSpec(n=n, generator=q)


def _initial_distribution(cluster: Cluster) -> np.ndarray:
    mask = 0
    for j in range(cluster.size):
        if cluster.initial_infected[j]:
            mask |= 1 << j
    pi0 = np.zeros(1 << cluster.size)
    pi0[mask] = 1.0
    return pi0


def _check_distribution(pi: np.ndarray) -> np.ndarray:
    low = pi.min()
    if low < -_NEG_TOL:
        raise ValueError(f"state distribution has negative mass {low}")
    pi = np.clip(pi, 0.0, None)
    if abs(pi.sum() - 1.0) > _SUM_TOL:
        raise ValueError(f"state distribution sums to {pi.sum()}, not 1")
    return pi


def _distribution_rk4(q: np.ndarray, pi0: np.ndarray, t: float, h: float) -> np.ndarray:
    """Classical RK4 on dpi/dt = pi Q with a fixed step; independent of expm."""
    steps = int(math.ceil(t / h))
    pi = pi0.copy()
    remaining = t
    for _ in range(steps):
        step = h if remaining > h else remaining
        k1 = pi @ q
        k2 = (pi + 0.5 * step * k1) @ q
        k3 = (pi + 0.5 * step * k2) @ q
        k4 = (pi + step * k3) @ q
        pi = pi + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        remaining -= step
    return pi


def state_distribution(params: ModelParams, cluster: Cluster, t: float,
                       method: str = "expm", rk4_step: float = 1e-4) -> np.ndarray:
    """Distribution over infected subsets at time ``t``."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    spec = build_ctmc(params, cluster)
    pi0 = _initial_distribution(cluster)
    if t == 0.0:
        return pi0
    if method == "expm":
        pi = pi0 @ expm(spec.generator * t)
    elif method == "rk4":
        pi = _distribution_rk4(spec.generator, pi0, t, rk4_step)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _check_distribution(pi)


def exact_marginals(params: ModelParams, cluster: Cluster, t: float,
                    method: str = "expm", rk4_step: float = 1e-4) -> np.ndarray:
    """P(individual j infected by t) for each j, at the cluster's allocation."""
    pi = state_distribution(params, cluster, t, method=method, rk4_step=rk4_step)
    n = cluster.size
    out = np.zeros(n)
    for j in range(n):
        bit = 1 << j
        out[j] = pi[[s for s in range(1 << n) if s & bit]].sum()
    return out


class _MarginalCache:
    """Memoizes exact_marginals per full allocation of one base cluster."""

    def __init__(self, params: ModelParams, cluster_base: Cluster, t: float):
        self.params = params
        self.cluster = cluster_base
        self.t = t
        self._store: dict[tuple, np.ndarray] = {}

    def marginals(self, allocation: tuple) -> np.ndarray:
        got = self._store.get(allocation)
        if got is None:
            got = exact_marginals(self.params,
                                  self.cluster.with_treatment(allocation), self.t)
            self._store[allocation] = got
        return got


def _full_allocation(n: int, j: int, x_j: int, others: tuple) -> tuple:
    return others[:j] + (x_j,) + others[j:]


def exact_individual_average(params: ModelParams, cluster_base: Cluster,
                             design: DesignSpec, j: int, x_j: int, t: float,
                             _cache: _MarginalCache | None = None) -> float:
    """Infection probability of j under x_j, averaged over the design's
    conditional allocation to the other cluster members."""
    n = cluster_base.size
    if n > MAX_AVERAGE_N:
        raise ValueError(f"design averaging limited to n <= {MAX_AVERAGE_N}, got {n}")
    cache = _cache or _MarginalCache(params, cluster_base, t)
    total = 0.0
    weight_sum = 0.0
    for others in itertools.product((0, 1), repeat=n - 1):
        w = conditional_pmf_others(design, n, j, x_j, others)
        if w == 0.0:
            continue
        weight_sum += w
        total += w * cache.marginals(_full_allocation(n, j, x_j, others))[j]
    if weight_sum == 0.0:
        raise ValueError(
            f"conditioning event X_j={x_j} has probability zero under the design")
    return total


@dataclass(frozen=True, eq=False)
class ExactDirectEffect:
    """Per-individual direct effects and their cluster mean."""

    per_individual: np.ndarray
    cluster_mean: float


def exact_de(params: ModelParams, cluster_base: Cluster,
             design: DesignSpec, t: float) -> ExactDirectEffect:
    """Exact DE for every individual: averaged outcome under own-treatment 1
    minus own-treatment 0, each marginalized per the design."""
    n = cluster_base.size
    cache = _MarginalCache(params, cluster_base, t)
    de = np.zeros(n)
    for j in range(n):
        y1 = exact_individual_average(params, cluster_base, design, j, 1, t, cache)
        y0 = exact_individual_average(params, cluster_base, design, j, 0, t, cache)
        de[j] = y1 - y0
    return ExactDirectEffect(per_individual=de, cluster_mean=float(de.mean()))


def check_block_decomposition(params: ModelParams, cluster_base: Cluster,
                              m: int, j: int, t: float) -> float:
    """Residual of the partner-allocation decomposition of the block DE.

    The left side is DE_j computed directly from the conditional allocation
    averages; the right side re-expresses it as paired contrasts between an
    allocation z with m-1 treated others and each allocation w that adds one
    more treated subject to z. Both sides are evaluated from the same exact
    marginals; the identity is purely combinatorial.
    """
    n = cluster_base.size
    if n > MAX_DECOMPOSE_N:
        raise ValueError(f"decomposition check limited to n <= {MAX_DECOMPOSE_N}")
    if not 1 <= m <= n - 1:
        raise ValueError(f"need 1 <= m <= n-1, got m={m}, n={n}")
    if not 0 <= j < n:
        raise ValueError(f"index {j} out of range")
    cache = _MarginalCache(params, cluster_base, t)

    def ybar(x_j: int, others: tuple) -> float:
        return cache.marginals(_full_allocation(n, j, x_j, others))[j]

    zs = [z for z in itertools.product((0, 1), repeat=n - 1) if sum(z) == m - 1]
    ws = [w for w in itertools.product((0, 1), repeat=n - 1) if sum(w) == m]
    lhs = (sum(ybar(1, z) for z in zs) / math.comb(n - 1, m - 1)
           - sum(ybar(0, w) for w in ws) / math.comb(n - 1, m))

    rhs = 0.0
    for z in zs:
        partners = [w for w in ws if all(wi >= zi for wi, zi in zip(w, z))]
        assert len(partners) == n - m
        rhs += sum(ybar(1, z) - ybar(0, w) for w in partners)
    rhs /= math.comb(n - 1, m - 1) * (n - m)
    return abs(lhs - rhs)
