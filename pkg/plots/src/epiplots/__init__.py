"""Figure rendering for the trial-simulation CSV schemas."""

from .figures import (DESIGN_COLORS, FigureKind, FigureSpec, heatmap_scale,
                      render)
from .schema import (MaskCell, SchemaError, SweepPoint, grid_from_cells,
                     read_mask_csv, read_sweep_csv)

__version__ = "0.1.0"

__all__ = [
    "DESIGN_COLORS", "FigureKind", "FigureSpec", "heatmap_scale", "render",
    "MaskCell", "SchemaError", "SweepPoint", "grid_from_cells",
    "read_mask_csv", "read_sweep_csv",
]
