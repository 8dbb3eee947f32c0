"""Numerical toolkit for level sets of inner functions on the unit disk."""

from . import catalog, criteria, evaluate, expr, geometry, jsonio, levelsets, sequences, singularities
from .catalog import CatalogEntry, catalog_json, get_entry, list_entries
from .criteria import (
    AleksandrovReport,
    CertifyConfig,
    Verdict,
    aleksandrov_report,
    certify,
    composition_bound_check,
    delta_u_inf,
    derivative_ratio_sup,
    radial_liminf,
    ratio_ladder,
)
from .evaluate import (
    blaschke_boundary_derivative_modulus,
    boundary_derivative,
    compose_ratio_A,
    eval_boundary,
    eval_disk,
    truncation_depth,
)
from .evaluate import evaluate as evaluate_jet
from .expr import atomic, blaschke, compose, frostman_shift, from_json, power, product, reflect, remove_zero
from .geometry import GeometryError, Inconclusive, PseudoDisk, StolzCone, mobius_eval, pseudo_distance
from .levelsets import build_grid, connectivity_report, inclusion_check, label_components, level_raster, rasterize_modulus
from .singularities import SingSet, sing_set

__version__ = "0.1.0"
