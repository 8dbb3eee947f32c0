"""Sublevel sets of inner functions on a boundary-adapted grid."""

from .analysis import (
    CONNECTED,
    DISCONNECTED,
    INCONCLUSIVE,
    BoundaryTrace,
    ConnectivityReport,
    EtaSearch,
    FactorBounds,
    InclusionReport,
    RasterCache,
    boundary_trace,
    connectivity_report,
    eta_search,
    factor_bounds_estimate,
    inclusion_check,
    level_curve_points,
    structural_zeros,
)
from .export import read_pgm, render, write_cells_csv, write_contour_csv, write_pgm
from .grid import DEFAULT_S, MAX_CELLS, GridError, WhitneyGrid, build_grid, cell_complex, euler_characteristic
from .raster import (
    ComponentLabels,
    ComponentRecord,
    LevelSetRaster,
    ModulusRaster,
    component_diagnostics,
    connected_labels,
    holes_by_complement,
    label_components,
    level_raster,
    rasterize_modulus,
)

__all__ = [name for name in dir() if not name.startswith("_")]
