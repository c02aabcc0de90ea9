"""Treatment assignment designs: Bernoulli, block, and cluster randomization.

Besides sampling allocations, this module exposes the exact allocation PMFs
and the conditional distribution of the other members' treatments given one
subject's treatment, which the exact oracle marginalizes over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class Design(str, Enum):
    BERNOULLI = "bernoulli"
    BLOCK = "block"
    CLUSTER = "cluster"


class DegenerateBlockDesign(ValueError):
    """Block design whose treated count would be 0 or n for some cluster."""


@dataclass(frozen=True)
class DesignSpec:
    """A randomization design: the kind plus its treatment probability.

    For Bernoulli and cluster randomization ``p`` is the treatment
    probability; for block randomization it is the treated fraction, with
    exactly floor(p*n) treated per cluster.
    """

    kind: Design
    p: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Design(self.kind))
        if not (0.0 < self.p < 1.0):
            raise ValueError(f"p must be in (0, 1), got {self.p}")

    def block_count(self, n: int) -> int:
        """Number treated per cluster of size n under the block design."""
        m = math.floor(self.p * n)
        if m < 1 or m > n - 1:
            raise DegenerateBlockDesign(
                f"block design with p={self.p} leaves an empty arm for n={n} (m={m})")
        return m

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "p": self.p}

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpec":
        return cls(kind=Design(d["kind"]), p=float(d.get("p", 0.5)))


def assign(design: DesignSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one treatment allocation for a cluster of size ``n``."""
    if n < 1:
        raise ValueError(f"cluster size must be >= 1, got {n}")
    if design.kind is Design.BERNOULLI:
        return (rng.random(n) < design.p).astype(np.int64)
    if design.kind is Design.BLOCK:
        m = design.block_count(n)
        x = np.zeros(n, dtype=np.int64)
        x[rng.choice(n, size=m, replace=False)] = 1
        return x
    # cluster: all-or-none
    bit = 1 if rng.random() < design.p else 0
    return np.full(n, bit, dtype=np.int64)


def allocation_pmf(design: DesignSpec, x) -> float:
    """Exact probability of the full allocation ``x`` under ``design``."""
    x = np.asarray(x, dtype=np.int64)
    n = x.size
    if n < 1 or not np.isin(x, (0, 1)).all():
        raise ValueError("allocation must be a nonempty binary vector")
    k = int(x.sum())
    p = design.p
    if design.kind is Design.BERNOULLI:
        return p ** k * (1.0 - p) ** (n - k)
    if design.kind is Design.BLOCK:
        m = design.block_count(n)
        return 1.0 / math.comb(n, m) if k == m else 0.0
    if k == n:
        return p
    if k == 0:
        return 1.0 - p
    return 0.0


def conditional_pmf_others(design: DesignSpec, n: int, j: int, x_j: int, x_others) -> float:
    """P(others' treatments = x_others | subject j's treatment = x_j).

    ``x_others`` has length n-1 and is indexed with subject j removed. When
    the joint configuration is impossible under the design the conditional
    probability is 0 (never an error); conditioning on an impossible x_j
    itself cannot occur for validated designs.
    """
    if not 0 <= j < n:
        raise ValueError(f"index {j} out of range for n={n}")
    if x_j not in (0, 1):
        raise ValueError(f"x_j must be 0 or 1, got {x_j}")
    others = np.asarray(x_others, dtype=np.int64)
    if others.shape != (n - 1,):
        raise ValueError(f"x_others must have length {n - 1}")
    if not np.isin(others, (0, 1)).all():
        raise ValueError("x_others must be binary")
    k = int(others.sum())
    p = design.p
    if design.kind is Design.BERNOULLI:
        return p ** k * (1.0 - p) ** (n - 1 - k)
    if design.kind is Design.BLOCK:
        m = design.block_count(n)
        return 1.0 / math.comb(n - 1, m - x_j) if k == m - x_j else 0.0
    if x_j == 1:
        return 1.0 if k == n - 1 else 0.0
    return 1.0 if k == 0 else 0.0
