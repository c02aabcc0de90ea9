"""Direct-effect point estimators for a realized trial, one per design.

The Bernoulli estimator is inverse-probability weighted with the known p;
the block and cluster estimators are within-arm means. A replicate where an
arm is empty (possible under cluster randomization with few clusters, or
malformed block data) yields a NaN estimate flagged ``degenerate`` rather
than a silent zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .randomization import Design, DesignSpec


@dataclass(frozen=True, eq=False)
class ClusterRecord:
    """One cluster's realized treatments and end-of-follow-up outcomes."""

    treatment: np.ndarray
    outcome: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.treatment, dtype=np.int64)
        y = np.asarray(self.outcome, dtype=np.int64)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("treatment and outcome must be 1-d with equal length")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "treatment", x)
        object.__setattr__(self, "outcome", y)

    @property
    def treated_cluster(self) -> bool:
        return bool(self.treatment.all())


@dataclass(frozen=True, eq=False)
class TrialData:
    """All clusters of one realized trial plus the design that produced it."""

    clusters: tuple[ClusterRecord, ...]
    design: DesignSpec

    def __post_init__(self) -> None:
        records = tuple(self.clusters)
        if not records:
            raise ValueError("trial must contain at least one cluster")
        if self.design.kind is Design.CLUSTER:
            for rec in records:
                s = int(rec.treatment.sum())
                if s not in (0, rec.treatment.size):
                    raise ValueError(
                        "cluster-randomized trial contains a partially treated cluster")
        object.__setattr__(self, "clusters", records)


@dataclass(frozen=True)
class TrialResult:
    """DE-hat for one trial; NaN with ``degenerate`` set when undefined."""

    de_hat: float
    n_clusters_used: int
    degenerate: bool = False


_DEGENERATE = TrialResult(de_hat=math.nan, n_clusters_used=0, degenerate=True)


def _de_bernoulli(xs: list, ys: list, p: float) -> float:
    total = 0.0
    for x, y in zip(xs, ys):
        acc = 0.0
        for xij, yij in zip(x, y):
            if yij:
                acc += xij / p - (1 - xij) / (1.0 - p)
        total += acc / len(x)
    return total / len(xs)


def _de_block(xs: list, ys: list) -> float:
    total = 0.0
    for x, y in zip(xs, ys):
        m = sum(x)
        n = len(x)
        if m == 0 or m == n:
            return math.nan
        treated = sum(yij for xij, yij in zip(x, y) if xij)
        control = sum(yij for xij, yij in zip(x, y) if not xij)
        total += treated / m - control / (n - m)
    return total / len(xs)


def _de_cluster(xs: list, ys: list) -> float:
    t_sum = t_count = c_sum = c_count = 0.0
    for x, y in zip(xs, ys):
        frac = sum(y) / len(y)
        if x[0]:
            t_sum += frac
            t_count += 1
        else:
            c_sum += frac
            c_count += 1
    if t_count == 0 or c_count == 0:
        return math.nan
    return t_sum / t_count - c_sum / c_count


def de_hat_bernoulli(data: TrialData, p: float | None = None) -> TrialResult:
    """Inverse-probability-weighted DE-hat; always defined for 0 < p < 1."""
    p = data.design.p if p is None else float(p)
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must be in (0, 1), got {p}")
    xs = [rec.treatment.tolist() for rec in data.clusters]
    ys = [rec.outcome.tolist() for rec in data.clusters]
    return TrialResult(de_hat=_de_bernoulli(xs, ys, p),
                       n_clusters_used=len(xs))


def de_hat_block(data: TrialData) -> TrialResult:
    """Mean over clusters of (treated-arm mean - control-arm mean)."""
    xs = [rec.treatment.tolist() for rec in data.clusters]
    ys = [rec.outcome.tolist() for rec in data.clusters]
    value = _de_block(xs, ys)
    if math.isnan(value):
        return _DEGENERATE
    return TrialResult(de_hat=value, n_clusters_used=len(xs))


def de_hat_cluster(data: TrialData) -> TrialResult:
    """Contrast of mean infection fractions between treated and control clusters."""
    xs = [rec.treatment.tolist() for rec in data.clusters]
    ys = [rec.outcome.tolist() for rec in data.clusters]
    value = _de_cluster(xs, ys)
    if math.isnan(value):
        return _DEGENERATE
    return TrialResult(de_hat=value, n_clusters_used=len(xs))


def de_hat(data: TrialData) -> TrialResult:
    """Design-matched estimate for the trial."""
    if data.design.kind is Design.BERNOULLI:
        return de_hat_bernoulli(data)
    if data.design.kind is Design.BLOCK:
        return de_hat_block(data)
    return de_hat_cluster(data)
