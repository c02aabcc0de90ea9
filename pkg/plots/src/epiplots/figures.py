"""Figure rendering for the harness CSV outputs.

Three kinds: single-panel effect-vs-gamma curves with CI bands, a grid of
such panels (one per input file), and (beta, gamma) heatmaps on a diverging
blue-white-red scale centered at zero with sign-mismatch cells overlaid in
black. Rendering is a pure function of the CSV content: fixed style, fixed
dpi, no timestamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import TwoSlopeNorm  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .schema import (MaskCell, SchemaError, SweepPoint, grid_from_cells,
                     read_mask_csv, read_sweep_csv)

DESIGN_COLORS = {"bernoulli": "black", "block": "red", "cluster": "blue"}
HEATMAP_CMAP = "bwr"
DPI = 150


class FigureKind(str, Enum):
    GAMMA_SWEEP = "sweep"
    PANEL_GRID = "panels"
    HEATMAP = "heatmap"


@dataclass(frozen=True)
class FigureSpec:
    kind: FigureKind
    input_paths: tuple
    output_path: str
    style: dict = field(default_factory=lambda: dict(DESIGN_COLORS))

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FigureKind(self.kind))
        paths = tuple(str(p) for p in self.input_paths)
        if not paths:
            raise SchemaError("at least one input CSV is required")
        object.__setattr__(self, "input_paths", paths)


def heatmap_scale(values) -> tuple:
    """Colormap and symmetric zero-centered norm for a value grid."""
    finite = [v for row in values for v in row if math.isfinite(v)]
    vmax = max((abs(v) for v in finite), default=0.0)
    if vmax == 0.0:
        vmax = 1e-12
    norm = TwoSlopeNorm(vmin=-vmax, vcenter=0.0, vmax=vmax)
    return plt.get_cmap(HEATMAP_CMAP), norm


def _draw_sweep(ax, points: list[SweepPoint], style: dict) -> None:
    by_design: dict[str, list[SweepPoint]] = {}
    for p in points:
        by_design.setdefault(p.design, []).append(p)
    for design, rows in sorted(by_design.items()):
        rows = sorted(rows, key=lambda r: r.gamma)
        gammas = [r.gamma for r in rows]
        means = [r.de_mean for r in rows]
        color = style.get(design, "gray")
        ax.plot(gammas, means, color=color, label=design, linewidth=1.5)
        lows = [r.ci_low for r in rows]
        highs = [r.ci_high for r in rows]
        if all(math.isfinite(v) for v in lows + highs):
            ax.fill_between(gammas, lows, highs, color=color, alpha=0.2,
                            linewidth=0)
    ax.axhline(0.0, color="0.6", linewidth=0.8, zorder=0)
    ax.set_xlabel("infectiousness effect")
    ax.set_ylabel("estimated direct effect")
    ax.legend(frameon=False, fontsize=8)


def _draw_heatmap(ax, path: str, cells: list[MaskCell]) -> None:
    betas, gammas, values, mismatch = grid_from_cells(path, cells)
    grid = np.ma.masked_invalid(np.array(values, dtype=float))
    cmap, norm = heatmap_scale(values)
    b_edges = _edges(betas)
    g_edges = _edges(gammas)
    mesh = ax.pcolormesh(b_edges, g_edges, grid, cmap=cmap, norm=norm,
                         shading="flat")
    for gi, g in enumerate(gammas):
        for bi, b in enumerate(betas):
            if mismatch[gi][bi]:
                ax.add_patch(Rectangle(
                    (b_edges[bi], g_edges[gi]),
                    b_edges[bi + 1] - b_edges[bi],
                    g_edges[gi + 1] - g_edges[gi],
                    facecolor="black", edgecolor="none"))
    ax.set_xlabel("susceptibility effect")
    ax.set_ylabel("infectiousness effect")
    plt.colorbar(mesh, ax=ax, shrink=0.85)


def _edges(centers: list[float]) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    if centers.size == 1:
        half = 0.5 if centers[0] == 0 else abs(centers[0]) * 0.5 or 0.5
        return np.array([centers[0] - half, centers[0] + half])
    mids = (centers[:-1] + centers[1:]) / 2.0
    first = centers[0] - (mids[0] - centers[0])
    last = centers[-1] + (centers[-1] - mids[-1])
    return np.concatenate([[first], mids, [last]])


def render(spec: FigureSpec) -> Path:
    """Render the figure described by ``spec``; returns the output path."""
    out = Path(spec.output_path)
    if spec.kind is FigureKind.GAMMA_SWEEP:
        points = [p for path in spec.input_paths
                  for p in read_sweep_csv(path)]
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        _draw_sweep(ax, points, spec.style)
    elif spec.kind is FigureKind.PANEL_GRID:
        k = len(spec.input_paths)
        ncols = min(3, k)
        nrows = (k + ncols - 1) // ncols
        fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                                 figsize=(4.0 * ncols, 3.0 * nrows))
        for idx, path in enumerate(spec.input_paths):
            ax = axes[idx // ncols][idx % ncols]
            _draw_sweep(ax, read_sweep_csv(path), spec.style)
            ax.set_title(Path(path).stem, fontsize=9)
        for idx in range(k, nrows * ncols):
            axes[idx // ncols][idx % ncols].set_axis_off()
    else:
        k = len(spec.input_paths)
        fig, axes = plt.subplots(1, k, squeeze=False,
                                 figsize=(4.5 * k, 3.8))
        for idx, path in enumerate(spec.input_paths):
            cells = read_mask_csv(path)
            ax = axes[0][idx]
            _draw_heatmap(ax, path, cells)
            designs = {c.design for c in cells}
            ax.set_title("/".join(sorted(designs)), fontsize=9)
    fig.tight_layout()
    metadata = {"Date": None} if out.suffix == ".svg" else None
    fig.savefig(out, dpi=DPI, metadata=metadata)
    plt.close(fig)
    return out
