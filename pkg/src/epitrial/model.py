"""Structural within-cluster transmission model.

The hazard a susceptible individual j experiences is

    lambda_j(t) = exp(x_j*beta + eta_j) * (alpha + sum_{k infected, k!=j} exp(x_k*gamma + xi_k))

where x is the binary treatment vector, beta scales own-treatment
susceptibility, gamma scales an infective's treatment effect on the hazard
they impose on others, alpha is the exogenous force of infection, and
(eta_j, xi_j) are individual susceptibility / infectiousness coefficients.
All other modules consume the types defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Bound on |beta|, |gamma| and the coefficient-distribution moments before
# exponentiation. The studied region is |beta|, |gamma| <= 2 and sd <= 1, so
# clamping at 10 changes nothing there while keeping exp() comfortably finite.
DEFAULT_CLAMP = 10.0


def _clamped(value: float, bound: float) -> float:
    value = float(value)
    if math.isnan(value):
        raise ValueError("parameter must not be NaN")
    return min(max(value, -bound), bound)


@dataclass(frozen=True)
class NormalSpec:
    """Normal distribution for an individual coefficient; sd=0 is a constant.

    Tagged with ``kind`` so configs stay extensible, but normal is the only
    supported family.
    """

    mean: float = 0.0
    sd: float = 0.1
    kind: str = "normal"

    def __post_init__(self) -> None:
        if self.kind != "normal":
            raise ValueError(f"unsupported distribution kind {self.kind!r}")
        if not (self.sd >= 0.0):
            raise ValueError(f"sd must be >= 0, got {self.sd}")

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.sd == 0.0:
            return np.full(size, self.mean, dtype=float)
        return rng.normal(self.mean, self.sd, size)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mean": self.mean, "sd": self.sd}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalSpec":
        return cls(mean=float(d.get("mean", 0.0)), sd=float(d.get("sd", 0.1)),
                   kind=d.get("kind", "normal"))


@dataclass(frozen=True)
class ModelParams:
    """Global transmission parameters.

    ``beta``, ``gamma`` and the coefficient-distribution moments are clamped
    into [-clamp, clamp] at construction, so a clamped value *is* the
    parameter everywhere downstream (hazard ratios stay exact).
    """

    alpha: float
    beta: float = 0.0
    gamma: float = 0.0
    eta_dist: NormalSpec = NormalSpec(0.0, 0.1)
    xi_dist: NormalSpec = NormalSpec(0.0, 0.1)
    clamp: float = DEFAULT_CLAMP

    def __post_init__(self) -> None:
        if not (self.clamp > 0.0):
            raise ValueError("clamp must be positive")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        object.__setattr__(self, "beta", _clamped(self.beta, self.clamp))
        object.__setattr__(self, "gamma", _clamped(self.gamma, self.clamp))
        for name in ("eta_dist", "xi_dist"):
            dist = getattr(self, name)
            clamped = NormalSpec(
                mean=_clamped(dist.mean, self.clamp),
                sd=min(float(dist.sd), self.clamp),
                kind=dist.kind,
            )
            object.__setattr__(self, name, clamped)

    def with_effects(self, beta: float, gamma: float) -> "ModelParams":
        return replace(self, beta=beta, gamma=gamma)


def _as_binary(vec, n: int, name: str) -> np.ndarray:
    arr = np.array(vec, dtype=np.int64)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must be binary")
    arr.flags.writeable = False
    return arr


def _as_reals(vec, n: int, name: str) -> np.ndarray:
    arr = np.array(vec, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Cluster:
    """One cluster: realized coefficients, treatment vector, follow-up time."""

    size: int
    eta: np.ndarray
    xi: np.ndarray
    treatment: np.ndarray
    horizon: float
    initial_infected: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"cluster size must be >= 1, got {self.size}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        object.__setattr__(self, "eta", _as_reals(self.eta, self.size, "eta"))
        object.__setattr__(self, "xi", _as_reals(self.xi, self.size, "xi"))
        object.__setattr__(self, "treatment",
                           _as_binary(self.treatment, self.size, "treatment"))
        init = self.initial_infected
        if init is None:
            init = np.zeros(self.size, dtype=np.int64)
        object.__setattr__(self, "initial_infected",
                           _as_binary(init, self.size, "initial_infected"))

    def with_treatment(self, treatment) -> "Cluster":
        return Cluster(size=self.size, eta=self.eta, xi=self.xi,
                       treatment=treatment, horizon=self.horizon,
                       initial_infected=self.initial_infected)


@dataclass(frozen=True, eq=False)
class EpidemicState:
    """Snapshot of the infection indicators at a point in time."""

    time: float
    infected: np.ndarray

    def __post_init__(self) -> None:
        if not (self.time >= 0.0):
            raise ValueError(f"time must be >= 0, got {self.time}")
        arr = np.array(self.infected, dtype=np.int64)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("infected must be binary")
        arr.flags.writeable = False
        object.__setattr__(self, "infected", arr)


def hazard(params: ModelParams, cluster: Cluster, state: EpidemicState, j: int) -> float:
    """Infection hazard for susceptible individual ``j`` in ``state``.

    Individuals contribute to j's hazard only while infected, and j never
    contributes to their own hazard.
    """
    n = cluster.size
    if not 0 <= j < n:
        raise ValueError(f"individual index {j} out of range for cluster of size {n}")
    infected = state.infected
    if infected.shape != (n,):
        raise ValueError("state does not match cluster size")
    if infected[j]:
        raise ValueError(f"individual {j} is already infected")
    x = cluster.treatment
    pressure = params.alpha
    for k in range(n):
        if k != j and infected[k]:
            pressure += math.exp(params.gamma * x[k] + cluster.xi[k])
    return math.exp(params.beta * x[j] + cluster.eta[j]) * pressure


def susceptibility_hazard_ratio(params: ModelParams) -> float:
    """Hazard ratio under own-treatment vs. not, everything else held fixed."""
    return math.exp(params.beta)
