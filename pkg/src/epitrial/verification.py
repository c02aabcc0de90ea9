"""Executable checks of the coupling's probabilistic guarantees.

``check_marginal_validity`` confirms that each arm of the coupled sampler is
distributed like the independent sampler run at that arm's allocation, via a
two-sample chi-square on the histogram of end-of-follow-up outcome vectors.
``check_dominance`` asserts the pathwise infection-time orderings that hold
sample-by-sample under the two contrasts used in the sign results: all-treated
vs. all-untreated, and a treated/untreated swap of a pair with the rest held
fixed. Dominance violations are counted at zero tolerance; strictness is only
asserted on the samples where the enabling event occurred (another individual
infected first, resp. the swapped partner infected before the focal subject).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import chi2

from .model import Cluster, ModelParams
from .simulator import simulate, simulate_coupled

MAX_HISTOGRAM_N = 6


class Contrast(str, Enum):
    CLUSTER_ALL_VS_NONE = "cluster_all_vs_none"
    BLOCK_SWAP_PAIR = "block_swap_pair"


class Relation(str, Enum):
    TREATED_LATER = "treated_later"
    IDENTICAL = "identical"
    TREATED_EARLIER = "treated_earlier"


def expected_relation(contrast: Contrast, gamma: float) -> Relation:
    """Ordering of arm-1 vs. arm-0 infection times implied by the contrast."""
    if gamma == 0.0:
        return Relation.IDENTICAL
    if contrast is Contrast.CLUSTER_ALL_VS_NONE:
        return Relation.TREATED_LATER if gamma < 0.0 else Relation.TREATED_EARLIER
    return Relation.TREATED_EARLIER if gamma < 0.0 else Relation.TREATED_LATER


@dataclass(frozen=True)
class DominanceSpec:
    """One pathwise-ordering check: the contrast and the expected relation."""

    contrast: Contrast
    gamma: float
    j: int | None = None
    k: int | None = None
    z: tuple[int, ...] | None = None
    expected: Relation | None = None

    def __post_init__(self) -> None:
        if self.contrast is Contrast.BLOCK_SWAP_PAIR:
            if self.j is None or self.k is None or self.j == self.k:
                raise ValueError("block swap contrast needs distinct indices j and k")
        derived = expected_relation(self.contrast, self.gamma)
        if self.expected is None:
            object.__setattr__(self, "expected", derived)
        elif self.expected is not derived:
            raise ValueError(
                f"expected relation {self.expected} inconsistent with gamma={self.gamma}")

    def allocations(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if self.contrast is Contrast.CLUSTER_ALL_VS_NONE:
            return np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64)
        others = self.z
        if others is None:
            others = tuple(0 for _ in range(n - 2))
        if len(others) != n - 2:
            raise ValueError(f"z must have length {n - 2}")
        x1 = np.zeros(n, dtype=np.int64)
        x0 = np.zeros(n, dtype=np.int64)
        rest = [i for i in range(n) if i not in (self.j, self.k)]
        for idx, bit in zip(rest, others):
            x1[idx] = bit
            x0[idx] = bit
        x1[self.j] = 1
        x0[self.k] = 1
        return x1, x0


@dataclass(frozen=True)
class DominanceReport:
    n_samples: int
    violations: int
    strict_opportunities: int
    strict_failures: int

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.strict_failures == 0


def check_dominance(spec: DominanceSpec, params: ModelParams, cluster: Cluster,
                    n_samples: int, rng: np.random.Generator) -> DominanceReport:
    """Count coupled samples violating the prescribed time ordering."""
    if params.gamma != spec.gamma:
        raise ValueError(
            f"params.gamma={params.gamma} does not match spec.gamma={spec.gamma}")
    n = cluster.size
    x1, x0 = spec.allocations(n)
    violations = 0
    strict_opportunities = 0
    strict_failures = 0
    for _ in range(n_samples):
        co = simulate_coupled(params, cluster, x1, x0, rng)
        t1 = co.outcome_treated.infection_time
        t0 = co.outcome_control.infection_time
        if spec.expected is Relation.IDENTICAL:
            if not np.array_equal(t1, t0):
                violations += 1
            continue
        if spec.contrast is Contrast.CLUSTER_ALL_VS_NONE:
            if spec.expected is Relation.TREATED_LATER:
                if np.any(t1 < t0):
                    violations += 1
            else:
                if np.any(t1 > t0):
                    violations += 1
            # strict ordering holds for everyone infected after the first event
            order = co.shared_order
            if order.size > 1:
                strict_opportunities += 1
                later = order[1:]
                if spec.expected is Relation.TREATED_LATER:
                    ok = np.all(t1[later] > t0[later])
                else:
                    ok = np.all(t1[later] < t0[later])
                if not ok:
                    strict_failures += 1
        else:
            tj1 = t1[spec.j]
            tj0 = t0[spec.j]
            if spec.expected is Relation.TREATED_EARLIER:
                if tj1 > tj0:
                    violations += 1
            else:
                if tj1 < tj0:
                    violations += 1
            order = list(co.shared_order)
            if order.index(spec.k) < order.index(spec.j):
                strict_opportunities += 1
                strict = tj1 < tj0 if spec.expected is Relation.TREATED_EARLIER else tj1 > tj0
                if not strict:
                    strict_failures += 1
    return DominanceReport(n_samples=n_samples, violations=violations,
                           strict_opportunities=strict_opportunities,
                           strict_failures=strict_failures)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


@dataclass(frozen=True)
class MarginalValidityReport:
    arm_treated: ChiSquareResult
    arm_control: ChiSquareResult
    n_samples: int

    def passed(self, p_threshold: float = 0.001) -> bool:
        return (self.arm_treated.p_value > p_threshold
                and self.arm_control.p_value > p_threshold)


def _two_sample_chisquare(counts_a: np.ndarray, counts_b: np.ndarray) -> ChiSquareResult:
    keep = (counts_a + counts_b) > 0
    a = counts_a[keep].astype(float)
    b = counts_b[keep].astype(float)
    if a.size <= 1:
        return ChiSquareResult(statistic=0.0, dof=0, p_value=1.0)
    na = a.sum()
    nb = b.sum()
    pooled = (a + b) / (na + nb)
    stat = float(((a - na * pooled) ** 2 / (na * pooled)).sum()
                 + ((b - nb * pooled) ** 2 / (nb * pooled)).sum())
    dof = a.size - 1
    return ChiSquareResult(statistic=stat, dof=dof,
                           p_value=float(chi2.sf(stat, dof)))


def _outcome_histogram_coupled(params, cluster, x1, x0, n_samples, rng):
    n = cluster.size
    counts1 = np.zeros(1 << n, dtype=np.int64)
    counts0 = np.zeros(1 << n, dtype=np.int64)
    weights = 1 << np.arange(n)
    for _ in range(n_samples):
        co = simulate_coupled(params, cluster, x1, x0, rng)
        counts1[int(co.outcome_treated.infected_by_horizon @ weights)] += 1
        counts0[int(co.outcome_control.infected_by_horizon @ weights)] += 1
    return counts1, counts0


def _outcome_histogram_independent(params, cluster, n_samples, rng):
    n = cluster.size
    counts = np.zeros(1 << n, dtype=np.int64)
    weights = 1 << np.arange(n)
    for _ in range(n_samples):
        out = simulate(params, cluster, rng)
        counts[int(out.infected_by_horizon @ weights)] += 1
    return counts


def check_marginal_validity(params: ModelParams, cluster: Cluster, x1, x0,
                            n_samples: int,
                            rng: np.random.Generator) -> MarginalValidityReport:
    """Chi-square comparison of each coupled arm against the independent
    sampler run at the same allocation, over the 2^n outcome histogram."""
    n = cluster.size
    if n > MAX_HISTOGRAM_N:
        raise ValueError(
            f"histogram test limited to n <= {MAX_HISTOGRAM_N} (2^n cells), got {n}")
    if params.beta != 0.0:
        raise ValueError("marginal validity check requires beta == 0")
    x1 = np.asarray(x1, dtype=np.int64)
    x0 = np.asarray(x0, dtype=np.int64)
    coupled1, coupled0 = _outcome_histogram_coupled(params, cluster, x1, x0,
                                                    n_samples, rng)
    indep1 = _outcome_histogram_independent(params, cluster.with_treatment(x1),
                                            n_samples, rng)
    indep0 = _outcome_histogram_independent(params, cluster.with_treatment(x0),
                                            n_samples, rng)
    return MarginalValidityReport(
        arm_treated=_two_sample_chisquare(coupled1, indep1),
        arm_control=_two_sample_chisquare(coupled0, indep0),
        n_samples=n_samples,
    )
