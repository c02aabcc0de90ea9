"""Strict readers for the harness CSV schemas.

Two file kinds exist: sweep rows
(``design,beta,gamma,de_mean,de_sd,ci_low,ci_high,n_reps,n_degenerate``)
and heatmap mask cells (``beta,gamma,design,de_mean,decisive,mismatch``).
Any header or parse deviation is fatal with a message naming the file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

SWEEP_COLUMNS = ("design", "beta", "gamma", "de_mean", "de_sd",
                 "ci_low", "ci_high", "n_reps", "n_degenerate")
MASK_COLUMNS = ("beta", "gamma", "design", "de_mean", "decisive", "mismatch")

KNOWN_DESIGNS = ("bernoulli", "block", "cluster")


class SchemaError(ValueError):
    """Input CSV does not conform to the documented schema."""


@dataclass(frozen=True)
class SweepPoint:
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
class MaskCell:
    beta: float
    gamma: float
    design: str
    de_mean: float
    decisive: bool
    mismatch: bool


def _rows(path, expected_header) -> list[dict]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        if tuple(header) != expected_header:
            raise SchemaError(
                f"{path}: header {','.join(header)!r} does not match the "
                f"documented schema {','.join(expected_header)!r}")
        rows = []
        for lineno, fields in enumerate(reader, start=2):
            if len(fields) != len(expected_header):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(expected_header)} fields, "
                    f"got {len(fields)}")
            rows.append(dict(zip(expected_header, fields)))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _parse(path, row, field, kind):
    raw = row[field]
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is bool:
            if raw not in ("0", "1"):
                raise ValueError
            return raw == "1"
    except ValueError:
        raise SchemaError(
            f"{path}: field {field!r} has non-{kind.__name__} value {raw!r}"
        ) from None
    return raw


def _check_design(path, raw: str) -> str:
    if raw not in KNOWN_DESIGNS:
        raise SchemaError(f"{path}: unknown design {raw!r}")
    return raw


def read_sweep_csv(path) -> list[SweepPoint]:
    points = []
    for row in _rows(path, SWEEP_COLUMNS):
        points.append(SweepPoint(
            design=_check_design(path, row["design"]),
            beta=_parse(path, row, "beta", float),
            gamma=_parse(path, row, "gamma", float),
            de_mean=_parse(path, row, "de_mean", float),
            de_sd=_parse(path, row, "de_sd", float),
            ci_low=_parse(path, row, "ci_low", float),
            ci_high=_parse(path, row, "ci_high", float),
            n_reps=_parse(path, row, "n_reps", int),
            n_degenerate=_parse(path, row, "n_degenerate", int),
        ))
    return points


def read_mask_csv(path) -> list[MaskCell]:
    cells = []
    for row in _rows(path, MASK_COLUMNS):
        cells.append(MaskCell(
            beta=_parse(path, row, "beta", float),
            gamma=_parse(path, row, "gamma", float),
            design=_check_design(path, row["design"]),
            de_mean=_parse(path, row, "de_mean", float),
            decisive=_parse(path, row, "decisive", bool),
            mismatch=_parse(path, row, "mismatch", bool),
        ))
    return cells


def grid_from_cells(path, cells: list[MaskCell]):
    """Arrange mask cells into a complete (gamma x beta) grid.

    Returns (betas, gammas, values, mismatch) with gamma as the first axis,
    matching the vertical-gamma orientation of the figures. NaN values mark
    cells whose estimate was degenerate in every replicate.
    """
    betas = sorted({c.beta for c in cells})
    gammas = sorted({c.gamma for c in cells})
    if len(cells) != len(betas) * len(gammas):
        raise SchemaError(
            f"{path}: cells do not form a complete beta x gamma grid")
    b_index = {b: i for i, b in enumerate(betas)}
    g_index = {g: i for i, g in enumerate(gammas)}
    values = [[math.nan] * len(betas) for _ in gammas]
    mismatch = [[False] * len(betas) for _ in gammas]
    seen = set()
    for c in cells:
        key = (c.beta, c.gamma)
        if key in seen:
            raise SchemaError(f"{path}: duplicate cell beta={c.beta}, "
                              f"gamma={c.gamma}")
        seen.add(key)
        values[g_index[c.gamma]][b_index[c.beta]] = c.de_mean
        mismatch[g_index[c.gamma]][b_index[c.beta]] = c.mismatch
    return betas, gammas, values, mismatch
