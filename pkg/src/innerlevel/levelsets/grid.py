"""Boundary-adapted polar grid.

Ring centres sit at ``r_i = 1 - 2**(-i*s/sub)`` for ``i = 0..L*sub`` (ring 0 is
the central disk).  Ring ``i`` spans the radii between the neighbouring
half-step radii and is cut into a power-of-two number of angular sectors sized
like the radial extent, so cells are roughly pseudohyperbolic squares.
Two cells are adjacent exactly when their closed sectors intersect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

MAX_CELLS = 10**8
DEFAULT_S = math.log2(1e6) / 20.0


class GridError(ValueError):
    pass


def _ring_counts(radii: np.ndarray, rel_extent: float) -> np.ndarray:
    counts = np.empty(len(radii), dtype=np.int64)
    counts[0] = 1
    for i in range(1, len(radii)):
        want = 2.0 * math.pi / (rel_extent * (1.0 - radii[i]))
        counts[i] = max(4, 1 << int(math.ceil(math.log2(want) - 1e-12)))
    return counts


@dataclass
class WhitneyGrid:
    level: int
    s: float
    sub: int
    radii: np.ndarray          # ring centre radii, length M+1
    bounds: np.ndarray         # ring boundary radii, bounds[i] = inner radius of ring i (bounds[0] = 0)
    counts: np.ndarray         # sectors per ring
    offsets: np.ndarray        # first cell index of each ring
    ring: np.ndarray           # per cell
    index: np.ndarray          # per cell sector index
    centers: np.ndarray        # per cell complex centre (seeded cells moved onto their seed)
    seeds: tuple = ()
    _edges: tuple | None = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return int(self.ring.size)

    @property
    def n_rings(self) -> int:
        return int(self.radii.size)

    @property
    def outer_radius(self) -> float:
        return float(self.radii[-1])

    @property
    def key(self) -> tuple:
        return (self.level, self.s, self.sub, self.seeds)

    def ring_cells(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i] + self.counts[i]))

    def sector(self, cells=None):
        """Angular interval (start, end) in radians of each cell (ring 0 gets the full turn)."""
        cells = np.arange(self.n_cells) if cells is None else np.asarray(cells)
        n = self.counts[self.ring[cells]].astype(float)
        start = 2 * math.pi * (self.index[cells] - 0.5) / n
        end = 2 * math.pi * (self.index[cells] + 0.5) / n
        centre = self.ring[cells] == 0
        start = np.where(centre, 0.0, start)
        end = np.where(centre, 2 * math.pi, end)
        return start, end

    def diameters(self) -> np.ndarray:
        inner = self.bounds[self.ring]
        outer = self.bounds[self.ring + 1]
        n = self.counts[self.ring]
        chord = 2.0 * outer * np.sin(np.minimum(math.pi / n, math.pi / 2))
        d = np.hypot(outer - inner, chord)
        return np.where(self.ring == 0, 2.0 * self.bounds[1], d)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency as index arrays (i < j), closed-sector intersection."""
        if self._edges is None:
            self._edges = _adjacency(self, touching=True)
        return self._edges

    def adjacency_matrix(self, touching: bool = True) -> sparse.csr_matrix:
        a, b = self.edges() if touching else _adjacency(self, touching=False)
        n = self.n_cells
        m = sparse.coo_matrix((np.ones(a.size, dtype=np.int8), (a, b)), shape=(n, n))
        return (m + m.T).tocsr()

    def locate(self, z) -> np.ndarray:
        """Index of the cell containing each point (-1 beyond the outer ring)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        r = np.abs(z)
        i = np.searchsorted(self.bounds, r, side="right") - 1
        outside = i >= self.n_rings
        i = np.minimum(i, self.n_rings - 1)
        n = self.counts[i]
        frac = np.mod(np.angle(z) / (2 * math.pi), 1.0)
        j = np.mod(np.floor(frac * n + 0.5).astype(np.int64), n)
        j = np.where(i == 0, 0, j)
        out = self.offsets[i] + j
        return np.where(outside, -1, out)


def build_grid(level: int, s: float = DEFAULT_S, sub: int = 1, seeds=()) -> WhitneyGrid:
    """Grid with rings reaching radius ``1 - 2**(-level*s)``.

    ``sub`` inserts that many rings per unit of ``level``; ``seeds`` are points
    (typically zeros) onto which the centre of their containing cell is moved.
    """
    if level < 2:
        raise GridError("level must be >= 2")
    if not s > 0:
        raise GridError("s must be positive")
    if sub < 1:
        raise GridError("sub must be >= 1")
    m = level * sub
    step = s / sub
    i = np.arange(m + 1, dtype=float)
    radii = 1.0 - 2.0 ** (-i * step)
    bounds = np.concatenate([[0.0], 1.0 - 2.0 ** (-(np.arange(1, m + 2) - 0.5) * step)])
    rel_extent = 2.0 ** (0.5 * step) - 2.0 ** (-0.5 * step)
    counts = _ring_counts(radii, rel_extent)
    total = int(counts.sum())
    if total > MAX_CELLS:
        raise GridError(f"grid would have {total} cells (limit {MAX_CELLS})")
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    ring = np.repeat(np.arange(m + 1), counts)
    index = np.arange(total, dtype=np.int64) - offsets[ring]
    angle = 2 * math.pi * index / counts[ring]
    centers = radii[ring] * np.exp(1j * angle)
    centers[0] = 0.0
    grid = WhitneyGrid(level, float(s), int(sub), radii, bounds, counts, offsets, ring, index, centers)
    kept = []
    for p in seeds:
        p = complex(p)
        if abs(p) >= bounds[-1]:
            continue
        cell = int(grid.locate(p)[0])
        if cell >= 0:
            grid.centers[cell] = p
            kept.append(p)
    grid.seeds = tuple(sorted(set(kept), key=lambda c: (c.real, c.imag)))
    return grid


def _adjacency(grid: WhitneyGrid, touching: bool) -> tuple[np.ndarray, np.ndarray]:
    src, dst = [], []
    for i in range(1, grid.n_rings):
        n = int(grid.counts[i])
        base = int(grid.offsets[i])
        j = np.arange(n)
        src.append(base + j)
        dst.append(base + (j + 1) % n)
    # centre disk touches every sector of ring 1 along an arc
    n1 = int(grid.counts[1])
    src.append(np.zeros(n1, dtype=np.int64))
    dst.append(grid.offsets[1] + np.arange(n1))
    for i in range(1, grid.n_rings - 1):
        n_in, n_out = int(grid.counts[i]), int(grid.counts[i + 1])
        ratio = n_out // n_in
        # units of 1/(2 n_out) of a turn: outer half width 1, inner half width `ratio`
        k = np.arange(n_out)
        near = np.floor(k / ratio + 0.5).astype(np.int64)
        for d in (-1, 0, 1):
            jj = np.mod(near + d, n_in)
            diff = np.mod(2 * k - 2 * jj * ratio + n_out, 2 * n_out) - n_out
            lim = 1 + ratio
            hit = np.abs(diff) <= lim if touching else np.abs(diff) < lim
            src.append(grid.offsets[i] + jj[hit])
            dst.append(grid.offsets[i + 1] + k[hit])
    a = np.concatenate(src)
    b = np.concatenate(dst)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    return pairs[:, 0], pairs[:, 1]


# ---------------------------------------------------------------- cell complex


@dataclass
class CellComplex:
    """Vertices and edges of the polygonal mesh formed by the closed cells.

    ``cell_vertices`` / ``cell_edges`` are flattened (cell, id) incidence lists.
    """

    vert_cell: np.ndarray
    vert_id: np.ndarray
    edge_cell: np.ndarray
    edge_id: np.ndarray


def _circular_run(start: np.ndarray, count: np.ndarray, modulus: np.ndarray, offset: np.ndarray):
    """Concatenate offset + (start + k) % modulus for k < count, per row."""
    total = int(count.sum())
    rows = np.repeat(np.arange(count.size), count)
    first = np.concatenate([[0], np.cumsum(count)[:-1]])
    k = np.arange(total) - first[rows]
    return rows, offset[rows] + np.mod(start[rows] + k, modulus[rows])


def cell_complex(grid: WhitneyGrid) -> CellComplex:
    m = grid.n_rings
    # breakpoints on circle c (c = 1..m) between ring c-1 and ring c, as exact binary turn fractions
    bps = [None]
    for c in range(1, m + 1):
        parts = []
        for q in (c - 1, c):
            if 1 <= q < m:
                n = int(grid.counts[q])
                parts.append((np.arange(n) + 0.5) / n)
        bps.append(np.unique(np.mod(np.concatenate(parts), 1.0)))
    v_off = np.zeros(m + 1, dtype=np.int64)
    for c in range(1, m):
        v_off[c + 1] = v_off[c] + bps[c].size
    n_verts = int(v_off[m] + bps[m].size)
    # arc segments share the vertex numbering (segment k runs from bp k to bp k+1)
    seg_off = v_off + n_verts
    rad_off = np.zeros(m + 1, dtype=np.int64)
    rad_off[1] = 2 * n_verts
    for q in range(1, m):
        rad_off[q + 1] = rad_off[q] + grid.counts[q]

    vc, vi, ec, ei = [], [], [], []
    # centre disk: whole circle 1
    b1 = bps[1].size
    vc.append(np.zeros(b1, dtype=np.int64))
    vi.append(v_off[1] + np.arange(b1))
    ec.append(np.zeros(b1, dtype=np.int64))
    ei.append(seg_off[1] + np.arange(b1))
    for q in range(1, m):
        n = int(grid.counts[q])
        cells = grid.offsets[q] + np.arange(n)
        lo = np.mod((np.arange(n) - 0.5) / n, 1.0)
        hi = np.mod((np.arange(n) + 0.5) / n, 1.0)
        for c in (q, q + 1):
            bp = bps[c]
            nb = bp.size
            i0 = np.searchsorted(bp, lo)
            i1 = np.searchsorted(bp, hi)
            cnt = np.mod(i1 - i0, nb) + 1
            mod = np.full(n, nb)
            rows, ids = _circular_run(i0, cnt, mod, np.full(n, v_off[c]))
            vc.append(cells[rows])
            vi.append(ids)
            rows, ids = _circular_run(i0, cnt - 1, mod, np.full(n, seg_off[c]))
            ec.append(cells[rows])
            ei.append(ids)
        j = np.arange(n)
        ec.append(np.concatenate([cells, cells]))
        ei.append(np.concatenate([rad_off[q] + j, rad_off[q] + (j + 1) % n]))
    return CellComplex(np.concatenate(vc), np.concatenate(vi), np.concatenate(ec), np.concatenate(ei))


def euler_characteristic(grid: WhitneyGrid, labels: np.ndarray, n_labels: int, complex_=None) -> np.ndarray:
    """V - E + F of the closed union of the cells carrying each label (labels < 0 ignored)."""
    cx = complex_ if complex_ is not None else cell_complex(grid)
    faces = np.bincount(labels[labels >= 0], minlength=n_labels)

    def distinct(cells, ids):
        lab = labels[cells]
        keep = lab >= 0
        key = np.unique(lab[keep].astype(np.int64) * (ids.max() + 1) + ids[keep])
        return np.bincount(key // (ids.max() + 1), minlength=n_labels)

    return distinct(cx.vert_cell, cx.vert_id) - distinct(cx.edge_cell, cx.edge_id) + faces
