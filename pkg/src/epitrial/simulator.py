"""Infection-time samplers for the structural hazard model.

Two samplers live here. ``simulate`` draws one trajectory for arbitrary
(beta, gamma) via the competing-exponentials decomposition: between events
every hazard is constant, so the next event time is exponential in the total
rate and the next victim is chosen proportional to its susceptibility weight.
``simulate_coupled`` runs the paired construction that drives both arms of a
two-allocation contrast from the same uniforms and the same infection order;
it is only valid when beta == 0, where the victim choice no longer depends on
treatment.

Both samplers generate the full infection sequence (almost surely finite
because alpha > 0) and threshold at the horizon afterwards, which keeps
coupled arms structurally aligned even when their times straddle the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Cluster, ModelParams, _as_binary


class SimultaneousInfections(RuntimeError):
    """Two sampled infection times compare equal; ties are measure-zero."""


class CouplingRequiresNullBeta(ValueError):
    """The coupled sampler is only defined for beta == 0."""


@dataclass(frozen=True, eq=False)
class EpidemicOutcome:
    """Infection times for one simulated cluster.

    ``infection_time[j]`` is -inf for individuals infected at baseline and
    +inf for individuals never infected (unreachable while alpha > 0).
    ``order`` lists the newly infected individuals in event order.
    """

    infection_time: np.ndarray
    infected_by_horizon: np.ndarray
    order: np.ndarray


@dataclass(frozen=True, eq=False)
class CoupledOutcome:
    """Paired outcomes under two allocations sharing the same randomness."""

    outcome_treated: EpidemicOutcome
    outcome_control: EpidemicOutcome
    shared_uniforms: np.ndarray
    shared_order: np.ndarray


def waiting_time_cdf(rate: float, w: float) -> float:
    """CDF of the exponential waiting time between infection events."""
    if not (rate > 0.0 and math.isfinite(rate)):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    if w < 0.0:
        raise ValueError(f"waiting time must be >= 0, got {w}")
    return -math.expm1(-rate * w)


def waiting_time_inverse(rate: float, u: float) -> float:
    """Inverse of ``waiting_time_cdf`` in its second argument."""
    if not (rate > 0.0 and math.isfinite(rate)):
        raise ValueError(f"rate must be positive and finite, got {rate}")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must be in [0, 1), got {u}")
    return -math.log1p(-u) / rate


def _outcome(times: list, order: list, horizon: float) -> EpidemicOutcome:
    time_arr = np.array(times, dtype=float)
    hit = (time_arr < horizon).astype(np.int64)
    order_arr = np.array(order, dtype=np.int64)
    for arr in (time_arr, hit, order_arr):
        arr.flags.writeable = False
    return EpidemicOutcome(infection_time=time_arr, infected_by_horizon=hit,
                           order=order_arr)


def _simulate_core(alpha: float, beta: float, gamma: float,
                   x: list, eta: list, xi: list, init: list,
                   rng: np.random.Generator) -> tuple[list, list]:
    """Event loop shared by ``simulate`` and the harness fast path.

    Returns (infection times, infection order) for one full generation.
    """
    n = len(x)
    exp_ = math.exp
    log1p_ = math.log1p

    times = [0.0] * n
    sus: list[int] = []
    sus_w = [0.0] * n
    pressure = alpha
    sum_w = 0.0
    for j in range(n):
        if init[j]:
            times[j] = -math.inf
            pressure += exp_(gamma * x[j] + xi[j])
        else:
            w = exp_(beta * x[j] + eta[j])
            sus_w[j] = w
            sum_w += w
            times[j] = math.inf
            sus.append(j)
    if not sus:
        raise ValueError("cluster has no susceptible individuals")

    u = rng.random(2 * len(sus)).tolist()
    order: list[int] = []
    t = 0.0
    ui = 0
    for _ in range(len(sus)):
        lam = sum_w * pressure
        if not (0.0 < lam < math.inf):
            raise ValueError(f"event rate is not positive finite: {lam}")
        t_next = t - log1p_(-u[ui]) / lam
        if t_next <= t:
            raise SimultaneousInfections(
                f"tied infection times at t={t}; ties have probability zero")
        t = t_next
        target = u[ui + 1] * sum_w
        ui += 2
        acc = 0.0
        v = sus[-1]
        for idx, a in enumerate(sus):
            acc += sus_w[a]
            if target < acc:
                v = a
                del sus[idx]
                break
        else:
            del sus[-1]
        times[v] = t
        order.append(v)
        sum_w -= sus_w[v]
        pressure += exp_(gamma * x[v] + xi[v])
    return times, order


def simulate(params: ModelParams, cluster: Cluster,
             rng: np.random.Generator) -> EpidemicOutcome:
    """Sample one infection trajectory and threshold it at the horizon."""
    times, order = _simulate_core(
        params.alpha, params.beta, params.gamma,
        cluster.treatment.tolist(), cluster.eta.tolist(), cluster.xi.tolist(),
        cluster.initial_infected.tolist(), rng)
    return _outcome(times, order, cluster.horizon)


def _simulate_coupled_core(alpha: float, gamma: float,
                           x1: list, x0: list, eta: list, xi: list, init: list,
                           rng: np.random.Generator):
    """Shared-randomness event loop; beta == 0 is the caller's contract."""
    n = len(eta)
    exp_ = math.exp
    log1p_ = math.log1p

    times1 = [0.0] * n
    times0 = [0.0] * n
    sus: list[int] = []
    sus_w = [0.0] * n
    p1 = alpha
    p0 = alpha
    sum_w = 0.0
    for j in range(n):
        if init[j]:
            times1[j] = -math.inf
            times0[j] = -math.inf
            p1 += exp_(gamma * x1[j] + xi[j])
            p0 += exp_(gamma * x0[j] + xi[j])
        else:
            w = exp_(eta[j])
            sus_w[j] = w
            sum_w += w
            times1[j] = math.inf
            times0[j] = math.inf
            sus.append(j)
    if not sus:
        raise ValueError("cluster has no susceptible individuals")

    u = rng.random(2 * len(sus)).tolist()
    order: list[int] = []
    t1 = 0.0
    t0 = 0.0
    ui = 0
    for _ in range(len(sus)):
        lam1 = sum_w * p1
        lam0 = sum_w * p0
        if not (0.0 < lam1 < math.inf and 0.0 < lam0 < math.inf):
            raise ValueError(f"event rate is not positive finite: {lam1}, {lam0}")
        neglog = -log1p_(-u[ui])
        t1_next = t1 + neglog / lam1
        t0_next = t0 + neglog / lam0
        if t1_next <= t1 or t0_next <= t0:
            raise SimultaneousInfections(
                "tied infection times in a coupled arm; ties have probability zero")
        t1 = t1_next
        t0 = t0_next
        target = u[ui + 1] * sum_w
        ui += 2
        acc = 0.0
        v = sus[-1]
        for idx, a in enumerate(sus):
            acc += sus_w[a]
            if target < acc:
                v = a
                del sus[idx]
                break
        else:
            del sus[-1]
        times1[v] = t1
        times0[v] = t0
        order.append(v)
        sum_w -= sus_w[v]
        p1 += exp_(gamma * x1[v] + xi[v])
        p0 += exp_(gamma * x0[v] + xi[v])
    return times1, times0, order, u[0::2]


def simulate_coupled(params: ModelParams, cluster_base: Cluster,
                     x1, x0, rng: np.random.Generator) -> CoupledOutcome:
    """Sample both arms of a two-allocation contrast on shared randomness.

    One uniform per event drives both arms' waiting times through the inverse
    exponential CDFs with arm-specific rates, and a single weighted draw picks
    the next infected individual for both arms, so the infection order is
    identical across arms.
    """
    if params.beta != 0.0:
        raise CouplingRequiresNullBeta(
            f"coupled sampling requires beta == 0, got beta={params.beta}")
    n = cluster_base.size
    x1 = _as_binary(x1, n, "x1")
    x0 = _as_binary(x0, n, "x0")
    times1, times0, order, waits = _simulate_coupled_core(
        params.alpha, params.gamma, x1.tolist(), x0.tolist(),
        cluster_base.eta.tolist(), cluster_base.xi.tolist(),
        cluster_base.initial_infected.tolist(), rng)
    horizon = cluster_base.horizon
    uniforms = np.array(waits, dtype=float)
    uniforms.flags.writeable = False
    order_arr = np.array(order, dtype=np.int64)
    order_arr.flags.writeable = False
    return CoupledOutcome(
        outcome_treated=_outcome(times1, order, horizon),
        outcome_control=_outcome(times0, order, horizon),
        shared_uniforms=uniforms,
        shared_order=order_arr,
    )
