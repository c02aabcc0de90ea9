"""Monte Carlo harness: replicated trials, effect sweeps, and heatmaps.

Every replicate draws a fresh population of clusters (sizes, coefficients,
horizons), assigns treatment under the configured design, simulates each
cluster, and applies the design-matched estimator. Work items are seeded
individually from (root seed, design, grid point, replicate index), and
aggregation consumes values in replicate order, so outputs are identical for
any worker count.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .estimators import TrialResult, _de_bernoulli, _de_block, _de_cluster
from .model import ModelParams, NormalSpec
from .randomization import Design, DesignSpec, assign
from .simulator import _simulate_core

_MASK64 = (1 << 64) - 1
_POPULATION_TAG = 0x706F7075
_DESIGN_IDS = {Design.BERNOULLI: 1, Design.BLOCK: 2, Design.CLUSTER: 3}

SWEEP_COLUMNS = ("design", "beta", "gamma", "de_mean", "de_sd",
                 "ci_low", "ci_high", "n_reps", "n_degenerate")
MASK_COLUMNS = ("beta", "gamma", "design", "de_mean", "decisive", "mismatch")


@dataclass(frozen=True)
class SizeSpec:
    """Cluster size distribution: a fixed n or shift + Poisson(lam)."""

    kind: str = "poisson_shifted"
    n: int = 3
    shift: int = 2
    lam: float = 2.0

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "poisson_shifted"):
            raise ValueError(f"unknown size distribution {self.kind!r}")
        if self.kind == "fixed" and self.n < 1:
            raise ValueError("fixed cluster size must be >= 1")
        if self.kind == "poisson_shifted" and (self.shift < 1 or self.lam < 0):
            raise ValueError("shifted Poisson needs shift >= 1 and lam >= 0")

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(count, self.n, dtype=np.int64)
        return self.shift + rng.poisson(self.lam, count)

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "n": self.n}
        return {"kind": "poisson_shifted", "shift": self.shift, "lam": self.lam}

    @classmethod
    def from_dict(cls, d: dict) -> "SizeSpec":
        if d["kind"] == "fixed":
            return cls(kind="fixed", n=int(d["n"]))
        return cls(kind="poisson_shifted", shift=int(d.get("shift", 2)),
                   lam=float(d.get("lam", 2.0)))


@dataclass(frozen=True)
class HorizonSpec:
    """Follow-up time distribution: fixed, or exponential with given mean."""

    kind: str = "fixed"
    value: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "exponential"):
            raise ValueError(f"unknown horizon distribution {self.kind!r}")
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ValueError("horizon scale must be positive and finite")

    def draw(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(count, self.value, dtype=float)
        return rng.exponential(self.value, count)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "HorizonSpec":
        return cls(kind=d["kind"], value=float(d["value"]))


class CoefficientMode(str, Enum):
    REDRAW = "redraw_per_replicate"
    FIXED = "fixed_across_replicates"


def _parse_grid(obj) -> tuple[float, ...]:
    if isinstance(obj, (list, tuple)):
        values = tuple(float(v) for v in obj)
    else:
        lo = float(obj["min"])
        hi = float(obj["max"])
        step = float(obj["step"])
        if not (step > 0.0 and math.isfinite(step)
                and math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ValueError(f"bad grid spec {obj!r}")
        count = int(round((hi - lo) / step)) + 1
        values = tuple(round(lo + i * step, 10) for i in range(count))
    if not values or not all(math.isfinite(v) for v in values):
        raise ValueError("grid must be nonempty and finite")
    return values


DEFAULT_GAMMA_GRID = _parse_grid({"min": -2.0, "max": 2.0, "step": 0.1})


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulation study.

    Defaults are the paper-style parameters at desk scale (half the clusters
    and replicates); ``paper_scale()`` restores the production values.
    """

    design: DesignSpec = DesignSpec(Design.BERNOULLI, 0.5)
    params: ModelParams = ModelParams(alpha=0.01)
    size_dist: SizeSpec = SizeSpec()
    horizon_dist: HorizonSpec = HorizonSpec()
    n_clusters: int = 500
    n_replicates: int = 200
    gammas: tuple[float, ...] = DEFAULT_GAMMA_GRID
    betas: tuple[float, ...] | None = None
    seed: int = 0
    coefficient_mode: CoefficientMode = CoefficientMode.REDRAW

    def __post_init__(self) -> None:
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        object.__setattr__(self, "gammas", _parse_grid(self.gammas))
        if self.betas is not None:
            object.__setattr__(self, "betas", _parse_grid(self.betas))
        object.__setattr__(self, "coefficient_mode",
                           CoefficientMode(self.coefficient_mode))

    def paper_scale(self) -> "ExperimentConfig":
        return replace(self, n_clusters=1000, n_replicates=500)

    def grid_points(self) -> list[tuple[float, float]]:
        betas = self.betas if self.betas is not None else (self.params.beta,)
        return [(b, g) for b in betas for g in self.gammas]

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict(),
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "gamma": self.params.gamma,
            "eta_dist": self.params.eta_dist.to_dict(),
            "xi_dist": self.params.xi_dist.to_dict(),
            "size_dist": self.size_dist.to_dict(),
            "horizon_dist": self.horizon_dist.to_dict(),
            "n_clusters": self.n_clusters,
            "n_replicates": self.n_replicates,
            "gammas": list(self.gammas),
            "betas": list(self.betas) if self.betas is not None else None,
            "seed": self.seed,
            "coefficient_mode": self.coefficient_mode.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        base = cls()
        params = ModelParams(
            alpha=float(d.get("alpha", base.params.alpha)),
            beta=float(d.get("beta", 0.0)),
            gamma=float(d.get("gamma", 0.0)),
            eta_dist=NormalSpec.from_dict(d["eta_dist"]) if "eta_dist" in d
            else base.params.eta_dist,
            xi_dist=NormalSpec.from_dict(d["xi_dist"]) if "xi_dist" in d
            else base.params.xi_dist,
        )
        betas = d.get("betas")
        return cls(
            design=DesignSpec.from_dict(d["design"]) if "design" in d else base.design,
            params=params,
            size_dist=SizeSpec.from_dict(d["size_dist"]) if "size_dist" in d
            else base.size_dist,
            horizon_dist=HorizonSpec.from_dict(d["horizon_dist"])
            if "horizon_dist" in d else base.horizon_dist,
            n_clusters=int(d.get("n_clusters", base.n_clusters)),
            n_replicates=int(d.get("n_replicates", base.n_replicates)),
            gammas=_parse_grid(d["gammas"]) if "gammas" in d else base.gammas,
            betas=_parse_grid(betas) if betas is not None else None,
            seed=int(d.get("seed", 0)),
            coefficient_mode=CoefficientMode(
                d.get("coefficient_mode", CoefficientMode.REDRAW.value)),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _float_bits(value: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(value)))[0]


def _replicate_rng(config: ExperimentConfig, beta: float, gamma: float,
                   replicate_index: int) -> np.random.Generator:
    key = (config.seed & _MASK64,
           _DESIGN_IDS[config.design.kind],
           _float_bits(config.design.p),
           _float_bits(beta),
           _float_bits(gamma),
           replicate_index)
    return np.random.default_rng(np.random.SeedSequence(key))


def _population_rng(config: ExperimentConfig) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence((config.seed & _MASK64, _POPULATION_TAG)))


def _draw_population(config: ExperimentConfig, rng: np.random.Generator):
    source = rng
    if config.coefficient_mode is CoefficientMode.FIXED:
        source = _population_rng(config)
    sizes = config.size_dist.draw(config.n_clusters, source)
    total = int(sizes.sum())
    etas = config.params.eta_dist.draw(total, source).tolist()
    xis = config.params.xi_dist.draw(total, source).tolist()
    horizons = config.horizon_dist.draw(config.n_clusters, source).tolist()
    return sizes.tolist(), etas, xis, horizons


def _run_trial(config: ExperimentConfig, beta: float, gamma: float,
               replicate_index: int, capture: bool = False):
    """Simulate one full trial; returns (xs, ys, detail-or-None)."""
    rng = _replicate_rng(config, beta, gamma, replicate_index)
    sizes, etas, xis, horizons = _draw_population(config, rng)
    alpha = config.params.alpha
    design = config.design
    xs: list[list[int]] = []
    ys: list[list[int]] = []
    detail = [] if capture else None
    offset = 0
    zeros = [0] * (max(sizes) if sizes else 0)
    for i, n in enumerate(sizes):
        eta = etas[offset:offset + n]
        xi = xis[offset:offset + n]
        offset += n
        horizon = horizons[i]
        x = assign(design, n, rng).tolist()
        times, _ = _simulate_core(alpha, beta, gamma, x, eta, xi, zeros[:n], rng)
        y = [1 if t < horizon else 0 for t in times]
        xs.append(x)
        ys.append(y)
        if capture:
            detail.append({"size": n, "treatment": x, "outcome": y,
                           "infection_time": times, "horizon": horizon,
                           "eta": eta, "xi": xi})
    return xs, ys, detail


def _estimate(config: ExperimentConfig, xs: list, ys: list) -> TrialResult:
    kind = config.design.kind
    if kind is Design.BERNOULLI:
        value = _de_bernoulli(xs, ys, config.design.p)
    elif kind is Design.BLOCK:
        value = _de_block(xs, ys)
    else:
        value = _de_cluster(xs, ys)
    if math.isnan(value):
        return TrialResult(de_hat=math.nan, n_clusters_used=0, degenerate=True)
    return TrialResult(de_hat=value, n_clusters_used=len(xs))


def run_replicate(config: ExperimentConfig, beta: float, gamma: float,
                  replicate_index: int) -> TrialResult:
    """One replicate: population draw, assignment, simulation, estimation."""
    xs, ys, _ = _run_trial(config, beta, gamma, replicate_index)
    return _estimate(config, xs, ys)


def run_trial_detail(config: ExperimentConfig, beta: float, gamma: float,
                     replicate_index: int = 0) -> dict:
    """Like ``run_replicate`` but keeps per-cluster outcomes for dumping."""
    xs, ys, detail = _run_trial(config, beta, gamma, replicate_index, capture=True)
    result = _estimate(config, xs, ys)
    return {
        "design": config.design.kind.value,
        "beta": beta,
        "gamma": gamma,
        "replicate_index": replicate_index,
        "de_hat": result.de_hat,
        "degenerate": result.degenerate,
        "clusters": detail,
    }


def _replicate_value(item) -> float:
    config, beta, gamma, replicate_index = item
    return run_replicate(config, beta, gamma, replicate_index).de_hat


def _collect(config: ExperimentConfig, points, threads: int) -> list[np.ndarray]:
    reps = config.n_replicates
    items = [(config, beta, gamma, r) for beta, gamma in points for r in range(reps)]
    if threads <= 1:
        values = [_replicate_value(item) for item in items]
    else:
        chunk = max(1, len(items) // (threads * 16))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(_replicate_value, items, chunksize=chunk))
    flat = np.array(values, dtype=float)
    return [flat[i * reps:(i + 1) * reps] for i in range(len(points))]


@dataclass(frozen=True)
class SweepRow:
    design: str
    beta: float
    gamma: float
    de_mean: float
    de_sd: float
    ci_low: float
    ci_high: float
    n_reps: int
    n_degenerate: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def _summarize(config: ExperimentConfig, beta: float, gamma: float,
               values: np.ndarray) -> SweepRow:
    degenerate = np.isnan(values)
    valid = values[~degenerate]
    n_deg = int(degenerate.sum())
    n = valid.size
    if n == 0:
        mean = sd = lo = hi = math.nan
    elif n == 1:
        mean = float(valid[0])
        sd = lo = hi = math.nan
    else:
        mean = float(valid.mean())
        sd = float(valid.std(ddof=1))
        half = 1.96 * sd / math.sqrt(n)
        lo = mean - half
        hi = mean + half
    return SweepRow(design=config.design.kind.value, beta=beta, gamma=gamma,
                    de_mean=mean, de_sd=sd, ci_low=lo, ci_high=hi,
                    n_reps=config.n_replicates, n_degenerate=n_deg)


def run_sweep(config: ExperimentConfig, threads: int = 1,
              out_path=None) -> SweepResult:
    """Run every grid point and aggregate replicate DE-hats."""
    points = config.grid_points()
    per_point = _collect(config, points, threads)
    rows = tuple(_summarize(config, beta, gamma, values)
                 for (beta, gamma), values in zip(points, per_point))
    result = SweepResult(rows=rows)
    if out_path is not None:
        write_sweep_csv(result, out_path)
    return result


@dataclass(frozen=True)
class MaskRow:
    beta: float
    gamma: float
    design: str
    de_mean: float
    decisive: bool
    mismatch: bool


def heatmap_mask(result: SweepResult) -> tuple[MaskRow, ...]:
    """Per-cell decisiveness and sign-mismatch flags for a 2-d sweep."""
    rows = []
    for row in result.rows:
        decisive = (not math.isnan(row.ci_low)
                    and (row.ci_low > 0.0 or row.ci_high < 0.0))
        mismatch = (decisive and row.beta != 0.0
                    and math.copysign(1.0, row.de_mean) != math.copysign(1.0, row.beta)
                    )
        rows.append(MaskRow(beta=row.beta, gamma=row.gamma, design=row.design,
                            de_mean=row.de_mean, decisive=decisive,
                            mismatch=mismatch))
    return tuple(rows)


def run_heatmap(config: ExperimentConfig, threads: int = 1,
                out_path=None, mask_path=None) -> tuple[SweepResult, tuple[MaskRow, ...]]:
    """2-d (beta, gamma) sweep plus the sign-mismatch mask."""
    if config.betas is None:
        raise ValueError("heatmap requires a beta grid")
    result = run_sweep(config, threads=threads, out_path=out_path)
    mask = heatmap_mask(result)
    if mask_path is not None:
        write_mask_csv(mask, mask_path)
    return result, mask


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep_csv(result: SweepResult, path) -> None:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in (
            row.design, row.beta, row.gamma, row.de_mean, row.de_sd,
            row.ci_low, row.ci_high, row.n_reps, row.n_degenerate)))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mask_csv(mask: tuple[MaskRow, ...], path) -> None:
    lines = [",".join(MASK_COLUMNS)]
    for row in mask:
        lines.append(",".join(_fmt(v) for v in (
            row.beta, row.gamma, row.design, row.de_mean,
            row.decisive, row.mismatch)))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


PROPOSITION_GAMMAS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def _expected_sign(design: Design, gamma: float) -> str:
    if design is Design.BERNOULLI or gamma == 0.0:
        return "zero"
    if design is Design.BLOCK:
        return "positive" if gamma < 0.0 else "negative"
    return "negative" if gamma < 0.0 else "positive"


def verify_propositions(config: ExperimentConfig, threads: int = 1) -> dict:
    """Sign checks of the replicate-mean DE against the three designs'
    predicted directions at beta=0, over gamma in {-2,-1,0,1,2}."""
    if config.params.beta != 0.0 or config.betas is not None:
        raise ValueError("proposition checks require beta == 0")
    insufficient = config.n_replicates < 2
    checks = []
    for kind in (Design.BERNOULLI, Design.BLOCK, Design.CLUSTER):
        cfg = replace(config, design=DesignSpec(kind, config.design.p),
                      gammas=PROPOSITION_GAMMAS, betas=None)
        result = run_sweep(cfg, threads=threads)
        for row in result.rows:
            expected = _expected_sign(kind, row.gamma)
            check = {
                "design": kind.value,
                "gamma": row.gamma,
                "de_mean": row.de_mean,
                "de_sd": row.de_sd,
                "ci_low": row.ci_low,
                "ci_high": row.ci_high,
                "n_degenerate": row.n_degenerate,
                "expected": expected,
            }
            if not insufficient:
                if expected == "zero":
                    ok = row.ci_low <= 0.0 <= row.ci_high
                    verdict = "consistent with zero" if ok else "failed"
                elif expected == "positive":
                    ok = row.ci_low > 0.0
                    verdict = "sign confirmed" if ok else "failed"
                else:
                    ok = row.ci_high < 0.0
                    verdict = "sign confirmed" if ok else "failed"
                check["verdict"] = verdict
                check["pass"] = ok
            checks.append(check)
    report = {
        "n_replicates": config.n_replicates,
        "insufficient_replication": insufficient,
        "checks": checks,
    }
    if not insufficient:
        report["all_pass"] = all(c["pass"] for c in checks)
    return report
