"""Shared test fixtures-as-functions."""

from __future__ import annotations

import numpy as np

from epitrial import Cluster, EpidemicState


def make_cluster(n, eta=None, xi=None, treatment=None, horizon=10.0,
                 initial=None) -> Cluster:
    return Cluster(
        size=n,
        eta=np.zeros(n) if eta is None else np.asarray(eta, dtype=float),
        xi=np.zeros(n) if xi is None else np.asarray(xi, dtype=float),
        treatment=np.zeros(n, dtype=int) if treatment is None else treatment,
        horizon=horizon,
        initial_infected=initial,
    )


def make_state(infected, time=0.0) -> EpidemicState:
    return EpidemicState(time=time, infected=np.asarray(infected, dtype=int))


def random_cluster(rng, n, horizon=10.0, scale=0.3, treated_p=0.5) -> Cluster:
    return make_cluster(
        n,
        eta=rng.normal(0.0, scale, n),
        xi=rng.normal(0.0, scale, n),
        treatment=(rng.random(n) < treated_p).astype(int),
        horizon=horizon,
    )
