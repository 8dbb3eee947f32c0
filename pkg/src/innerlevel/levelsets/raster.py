"""Moduli on a grid, sublevel masks and component labelling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .._parallel import map_chunks
from ..evaluate import evaluate
from ..expr import InnerExpr
from .grid import WhitneyGrid, cell_complex, euler_characteristic


@dataclass
class ModulusRaster:
    """|u| at every cell centre with an absolute error bound; ``valid`` is False
    where the evaluator could not meet its tolerance."""

    grid: WhitneyGrid
    modulus: np.ndarray
    error: np.ndarray
    valid: np.ndarray

    @property
    def invalid_count(self) -> int:
        return int((~self.valid).sum())

    def at(self, eta: float) -> "LevelSetRaster":
        return level_raster(self, eta)


@dataclass
class LevelSetRaster:
    grid: WhitneyGrid
    modulus: np.ndarray
    error: np.ndarray
    valid: np.ndarray
    eta: float
    mask: np.ndarray       # |u(centre)| < eta as computed
    uncertain: np.ndarray  # invalid, or |modulus - eta| within the error bound

    @property
    def certain_mask(self) -> np.ndarray:
        return self.mask & ~self.uncertain

    @property
    def optimistic_mask(self) -> np.ndarray:
        return self.mask | self.uncertain

    @property
    def uncertain_fraction(self) -> float:
        denom = int(self.optimistic_mask.sum())
        return float(self.uncertain.sum()) / denom if denom else 0.0


def rasterize_modulus(u: InnerExpr, grid: WhitneyGrid, eps: float = 1e-8) -> ModulusRaster:
    if not eps > 0:
        raise ValueError("eps must be positive")

    def work(z):
        jet = evaluate(u, z, 0, eps)
        return np.abs(jet.f[0]), jet.e[0], jet.ok

    parts = map_chunks(work, grid.centers)
    modulus = np.concatenate([p[0] for p in parts])
    error = np.concatenate([p[1] for p in parts])
    valid = np.concatenate([p[2] for p in parts]) & np.isfinite(modulus)
    modulus = np.where(np.isfinite(modulus), modulus, np.nan)
    return ModulusRaster(grid, modulus, error, valid)


def level_raster(mr: ModulusRaster, eta: float) -> LevelSetRaster:
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    with np.errstate(invalid="ignore"):
        mask = mr.valid & (mr.modulus < eta)
        uncertain = ~mr.valid | (np.abs(mr.modulus - eta) <= mr.error)
    return LevelSetRaster(mr.grid, mr.modulus, mr.error, mr.valid, float(eta), mask, uncertain)


@dataclass
class ComponentLabels:
    """Partition of the labelled cells into adjacency-connected components.

    ``labels`` is -1 outside the labelled set; per-component arrays are indexed
    by label.
    """

    grid: WhitneyGrid
    labels: np.ndarray
    count: int
    sizes: np.ndarray
    min_modulus: np.ndarray
    witness_cell: np.ndarray
    holes: np.ndarray
    boundary_adjacent: np.ndarray

    def witness(self, k: int) -> complex:
        return complex(self.grid.centers[self.witness_cell[k]])


def _complex_of(grid: WhitneyGrid):
    cx = getattr(grid, "_complex", None)
    if cx is None:
        cx = cell_complex(grid)
        grid._complex = cx
    return cx


def connected_labels(grid: WhitneyGrid, member: np.ndarray) -> tuple[np.ndarray, int]:
    """Labels (-1 for non-members) of the components of ``member`` under closed-cell adjacency."""
    a, b = grid.edges()
    keep = member[a] & member[b]
    idx = np.flatnonzero(member)
    if idx.size == 0:
        return np.full(grid.n_cells, -1), 0
    pos = np.full(grid.n_cells, -1)
    pos[idx] = np.arange(idx.size)
    from scipy import sparse

    m = sparse.coo_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8), (pos[a[keep]], pos[b[keep]])), shape=(idx.size, idx.size)
    )
    n, lab = csgraph.connected_components(m, directed=False)
    labels = np.full(grid.n_cells, -1)
    labels[idx] = lab
    return labels, int(n)


def label_components(raster: LevelSetRaster, include_uncertain: bool = False) -> ComponentLabels:
    """Components of the certain mask (uncertain cells never bridge), or of the
    optimistic mask when ``include_uncertain``."""
    grid = raster.grid
    member = raster.optimistic_mask if include_uncertain else raster.certain_mask
    labels, n = connected_labels(grid, member)
    sizes = np.bincount(labels[labels >= 0], minlength=n)
    mod = np.where(np.isfinite(raster.modulus), raster.modulus, np.inf)
    min_mod = np.full(n, np.inf)
    witness = np.zeros(n, dtype=np.int64)
    if n:
        order = np.lexsort((np.arange(grid.n_cells), mod, labels))
        order = order[labels[order] >= 0]
        first = np.concatenate([[True], labels[order][1:] != labels[order][:-1]])
        heads = order[first]
        witness[labels[heads]] = heads
        min_mod[labels[heads]] = mod[heads]
    chi = euler_characteristic(grid, labels, n, _complex_of(grid)) if n else np.zeros(0, dtype=np.int64)
    outer = grid.ring == grid.n_rings - 1
    touch = np.zeros(n, dtype=bool)
    if n:
        touch[np.unique(labels[outer & (labels >= 0)])] = True
    return ComponentLabels(grid, labels, n, sizes, min_mod, witness, (1 - chi).astype(np.int64), touch)


def holes_by_complement(grid: WhitneyGrid, labels: np.ndarray, k: int) -> int:
    """Independent hole count: bounded components of the complement of component k.

    Complement cells are joined across shared edges of positive length; the
    region beyond the outer ring is one extra node.
    """
    from scipy import sparse

    comp = labels != k
    a, b = grid.adjacency_matrix(touching=False).nonzero()
    keep = comp[a] & comp[b]
    n = grid.n_cells
    outer = np.flatnonzero(comp & (grid.ring == grid.n_rings - 1))
    rows = np.concatenate([a[keep], outer])
    cols = np.concatenate([b[keep], np.full(outer.size, n)])
    m = sparse.coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n + 1, n + 1))
    _, lab = csgraph.connected_components(m, directed=False)
    present = np.unique(lab[np.concatenate([np.flatnonzero(comp), [n]])])
    return int(present.size - 1)


@dataclass
class ComponentRecord:
    label: int
    cells: int
    min_modulus: float
    witness: complex
    holes: int
    boundary_adjacent: bool

    @property
    def simply_connected(self) -> bool:
        return self.holes == 0

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "cells": self.cells,
            "min_modulus": self.min_modulus,
            "witness": {"re": self.witness.real, "im": self.witness.imag},
            "holes": self.holes,
            "boundary_adjacent": self.boundary_adjacent,
        }


def component_diagnostics(labels: ComponentLabels, u: InnerExpr | None = None, eps: float = 1e-12) -> list:
    """Per-component record; with ``u`` the witness modulus is re-evaluated at tighter eps."""
    out = []
    for k in range(labels.count):
        w = labels.witness(k)
        m = float(labels.min_modulus[k])
        if u is not None:
            jet = evaluate(u, w, 0, eps)
            if jet.ok[0]:
                m = float(abs(jet.f[0][0]))
        out.append(ComponentRecord(k, int(labels.sizes[k]), m, w, int(labels.holes[k]), bool(labels.boundary_adjacent[k])))
    return out
