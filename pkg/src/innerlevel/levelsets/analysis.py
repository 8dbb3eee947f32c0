"""Connectivity verdicts, inclusion checks, factor bounds and boundary traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..evaluate import evaluate
from ..expr import Blaschke, InnerExpr, Product, Reflected
from ..geometry import TWO_PI
from .grid import DEFAULT_S, WhitneyGrid, build_grid
from .raster import (
    LevelSetRaster,
    ModulusRaster,
    component_diagnostics,
    label_components,
    level_raster,
    rasterize_modulus,
)

CONNECTED = "connected"
DISCONNECTED = "disconnected"
INCONCLUSIVE = "inconclusive"


def structural_zeros(u: InnerExpr) -> list:
    """Zeros of u that are visible structurally (Blaschke factors, possibly reflected)."""
    if isinstance(u, Blaschke):
        seq = u.zeros
        return list(seq.zeros(seq.max_depth))
    if isinstance(u, Product):
        return [z for f in u.factors for z in structural_zeros(f)]
    if isinstance(u, Reflected):
        return [-z for z in structural_zeros(u.child)]
    return []


class RasterCache:
    """Grids and moduli per level for one function, so several eta share work."""

    def __init__(self, u: InnerExpr, s: float = DEFAULT_S, sub: int = 1, eps: float = 1e-8):
        self.u = u
        self.s = s
        self.sub = sub
        self.eps = eps
        self._seeds = structural_zeros(u)
        self._store: dict[int, ModulusRaster] = {}

    def grid(self, level: int) -> WhitneyGrid:
        return self.modulus(level).grid

    def modulus(self, level: int) -> ModulusRaster:
        if level not in self._store:
            g = build_grid(level, self.s, self.sub, seeds=self._seeds)
            self._store[level] = rasterize_modulus(self.u, g, self.eps)
        return self._store[level]


@dataclass
class LevelResult:
    level: int
    components: int
    optimistic_components: int
    uncertain_fraction: float
    invalid_cells: int
    cells: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConnectivityReport:
    eta: float
    levels: list
    counts: list
    stable: bool
    verdict: str
    uncertain_fraction: float
    k_stable: int
    uncertainty_threshold: float
    per_level: list = field(default_factory=list)
    components: list = field(default_factory=list)  # diagnostics at the last level
    reasons: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": "innerlevel/v1",
            "kind": "connectivity_report",
            "eta": self.eta,
            "levels": list(self.levels),
            "counts": list(self.counts),
            "stable": self.stable,
            "verdict": self.verdict,
            "uncertain_fraction": self.uncertain_fraction,
            "k_stable": self.k_stable,
            "uncertainty_threshold": self.uncertainty_threshold,
            "per_level": [p.to_json() for p in self.per_level],
            "components": [c.to_json() for c in self.components],
            "reasons": list(self.reasons),
        }


def _levels(levels) -> list:
    if isinstance(levels, int):
        return [levels]
    lv = sorted(set(int(x) for x in levels))
    if not lv:
        raise ValueError("empty level range")
    return lv


def connectivity_report(
    u: InnerExpr,
    eta: float,
    levels=range(8, 11),
    eps: float = 1e-8,
    s: float = DEFAULT_S,
    sub: int = 1,
    k_stable: int = 3,
    uncertainty_threshold: float = 0.005,
    cache: RasterCache | None = None,
) -> ConnectivityReport:
    """Label the certain part of Ω_u(eta) on each level and decide a verdict.

    connected: the last ``k_stable`` levels each show exactly one component and the
    uncertain fraction at the last level is below the threshold.
    disconnected: the last ``k_stable`` levels each show at least two components
    that stay separate even when uncertain cells are allowed to join them.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    lv = _levels(levels)
    cache = cache or RasterCache(u, s, sub, eps)
    per_level = []
    last = None
    for L in lv:
        lr = level_raster(cache.modulus(L), eta)
        pess = label_components(lr)
        opt = label_components(lr, include_uncertain=True)
        per_level.append(
            LevelResult(L, pess.count, opt.count, lr.uncertain_fraction, int((~lr.valid).sum()), lr.grid.n_cells)
        )
        last = pess
    counts = [p.components for p in per_level]
    tail = per_level[-k_stable:]
    stable = len(tail) >= k_stable and len({p.components for p in tail}) == 1
    frac = per_level[-1].uncertain_fraction
    reasons = []
    if len(tail) < k_stable:
        verdict = INCONCLUSIVE
        reasons.append(f"only {len(tail)} level(s) run, {k_stable} needed for stability")
    elif stable and tail[-1].components == 1 and frac < uncertainty_threshold:
        verdict = CONNECTED
    elif all(p.components >= 2 and p.optimistic_components >= 2 for p in tail):
        verdict = DISCONNECTED
    else:
        verdict = INCONCLUSIVE
        if not stable:
            reasons.append(f"component counts {counts} not stable over the last {k_stable} levels")
        if frac >= uncertainty_threshold:
            reasons.append(f"uncertain fraction {frac:.3g} >= {uncertainty_threshold:g}")
        if tail[-1].components == 0:
            reasons.append("empty sublevel set on the grid")
        if any(p.components >= 2 > p.optimistic_components for p in tail):
            reasons.append("separation relies on uncertain cells")
    return ConnectivityReport(
        eta=float(eta),
        levels=lv,
        counts=counts,
        stable=stable,
        verdict=verdict,
        uncertain_fraction=frac,
        k_stable=k_stable,
        uncertainty_threshold=uncertainty_threshold,
        per_level=per_level,
        components=component_diagnostics(last) if last is not None else [],
        reasons=reasons,
    )


# ---------------------------------------------------------------- inclusion


@dataclass
class InclusionReport:
    subset: str
    superset: str
    violations: int
    max_violation_margin: float
    uncertain_excluded: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {"schema": "innerlevel/v1", "kind": "inclusion_report", **self.__dict__}


def inclusion_check(inner: LevelSetRaster, outer: LevelSetRaster, subset: str = "inner", superset: str = "outer") -> InclusionReport:
    """Cells in the inner mask but not in the outer mask, ignoring uncertain cells of either.

    The margin of a violating cell is how far its outer modulus exceeds the outer
    level after subtracting both error bounds.
    """
    if inner.grid is not outer.grid and inner.grid.key != outer.grid.key:
        raise ValueError("rasters live on different grids")
    skip = inner.uncertain | outer.uncertain
    bad = inner.mask & ~outer.mask & ~skip
    margin = (outer.modulus - outer.eta) - outer.error - inner.error
    worst = float(margin[bad].max()) if bad.any() else 0.0
    excluded = int((inner.mask & ~outer.mask & skip).sum())
    return InclusionReport(subset, superset, int(bad.sum()), worst, excluded)


# ---------------------------------------------------------------- factor bounds


@dataclass
class FactorBounds:
    delta_hat: float
    sigma_hat: float
    band_cells: int
    curve_points: int
    band_delta: float    # min |u| over the raw band cells
    band_sigma: float    # max |v| over the raw band cells
    eta: float
    delta_margin: float  # delta_hat - eta
    sigma_margin: float  # 1 - sigma_hat
    hypothesis_holds: bool
    level: int

    def to_json(self) -> dict:
        return {"schema": "innerlevel/v1", "kind": "factor_bounds", **self.__dict__}


def local_gradient(grid: WhitneyGrid, values: np.ndarray) -> np.ndarray:
    """Largest neighbour difference quotient of ``values`` at each cell."""
    a, b = grid.edges()
    dist = np.abs(grid.centers[a] - grid.centers[b])
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.abs(values[a] - values[b]) / dist
    q = np.where(np.isfinite(q), q, 0.0)
    g = np.zeros(grid.n_cells)
    np.maximum.at(g, a, q)
    np.maximum.at(g, b, q)
    return g


def level_curve_points(theta: InnerExpr, grid: WhitneyGrid, modulus: np.ndarray, member: np.ndarray,
                       eta: float, eps: float = 1e-10, steps: int = 40) -> np.ndarray:
    """Points with |theta| = eta, found by bisection on every edge between
    neighbouring member cells whose moduli straddle eta."""
    a, b = grid.edges()
    keep = member[a] & member[b] & ((modulus[a] - eta) * (modulus[b] - eta) <= 0.0)
    lo, hi = grid.centers[a[keep]], grid.centers[b[keep]]
    if lo.size == 0:
        return lo
    # orient so that |theta(lo)| < eta <= |theta(hi)|
    swap = modulus[a[keep]] >= eta
    lo, hi = np.where(swap, hi, lo), np.where(swap, lo, hi)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = np.abs(evaluate(theta, mid, 0, eps).f[0]) < eta
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def factor_bounds_estimate(
    theta: InnerExpr,
    u: InnerExpr,
    v: InnerExpr,
    eta: float,
    grid: WhitneyGrid,
    eps: float = 1e-8,
    margin: float = 0.0,
    safety: float = 2.0,
    rasters: tuple | None = None,
) -> FactorBounds:
    """Estimates of inf |u| and sup |v| on the curve |theta| = eta.

    The discrete level band holds the cells with ||theta| - eta| <= safety *
    diameter * local gradient.  Inside the band the curve itself is located by
    bisection between straddling neighbours and |u|, |v| are read off there;
    raw band extremes are reported alongside.  ``theta`` must equal ``u * v``,
    which is checked pointwise on the grid.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    mt, mu, mv = rasters or (rasterize_modulus(f, grid, eps) for f in (theta, u, v))
    ok = mt.valid & mu.valid & mv.valid
    tol = mt.error + mu.error + mv.error + 1e-9
    if np.any(ok & (np.abs(mt.modulus - mu.modulus * mv.modulus) > tol)):
        raise ValueError("theta is not the product u*v on the grid")
    lo_t, hi_t = float(mt.modulus[ok].min()), float(mt.modulus[ok].max())
    if not lo_t <= eta <= hi_t:
        raise ValueError(f"empty level band: eta={eta} outside the range [{lo_t:.3g}, {hi_t:.3g}] of |theta| on the grid")
    width = safety * grid.diameters() * local_gradient(grid, np.where(ok, mt.modulus, np.nan))
    band = ok & (np.abs(mt.modulus - eta) <= width)
    if not band.any():
        raise ValueError(f"empty level band: eta={eta} not attained by |theta| on the grid")
    band_d = float(mu.modulus[band].min())
    band_s = float(mv.modulus[band].max())
    pts = level_curve_points(theta, grid, mt.modulus, band, eta)
    if pts.size:
        ju = evaluate(u, pts, 0, eps)
        jv = evaluate(v, pts, 0, eps)
        good = ju.ok & jv.ok
        pts_ok = int(good.sum())
    else:
        pts_ok = 0
    if pts_ok:
        d = float(np.abs(ju.f[0][good]).min())
        s = float(np.abs(jv.f[0][good]).max())
    else:
        d, s = band_d, band_s
    holds = (eta + margin < d < 1.0) and (eta + margin < s < 1.0 - margin)
    return FactorBounds(d, s, int(band.sum()), pts_ok, band_d, band_s, float(eta), d - eta, 1.0 - s, holds,
                        grid.level)


# ---------------------------------------------------------------- eta search


@dataclass
class EtaSearch:
    lower: float
    upper: float
    lower_verdict: str
    upper_verdict: str
    found: bool
    level: int
    evaluations: list

    def to_json(self) -> dict:
        return {"schema": "innerlevel/v1", "kind": "eta_search", **self.__dict__}


def eta_search(
    u: InnerExpr,
    level: int,
    eta_min: float = 0.05,
    eta_max: float = 0.99,
    tol_eta: float = 0.01,
    eps: float = 1e-8,
    s: float = DEFAULT_S,
    sub: int = 1,
    k_stable: int = 3,
    cache: RasterCache | None = None,
) -> EtaSearch:
    """Bisect for the smallest eta with a connected verdict (levels ``level-k_stable+1..level``).

    Sublevel sets grow with eta, so once connected at eta_max the search moves the
    connected endpoint down.  The result brackets the transition within ``tol_eta``.
    """
    if not 0.0 < eta_min < eta_max < 1.0:
        raise ValueError("need 0 < eta_min < eta_max < 1")
    cache = cache or RasterCache(u, s, sub, eps)
    lv = list(range(level - k_stable + 1, level + 1))
    log = []

    def verdict(eta):
        r = connectivity_report(u, eta, lv, eps, s, sub, k_stable, cache=cache)
        log.append({"eta": eta, "verdict": r.verdict, "counts": r.counts})
        return r.verdict

    v_lo = verdict(eta_min)
    if v_lo == CONNECTED:
        return EtaSearch(eta_min, eta_min, v_lo, v_lo, True, level, log)
    v_hi = verdict(eta_max)
    if v_hi != CONNECTED:
        if v_lo == INCONCLUSIVE and v_hi == INCONCLUSIVE:
            raise ValueError("all-inconclusive eta range")
        return EtaSearch(eta_min, eta_max, v_lo, v_hi, False, level, log)
    lo, hi = eta_min, eta_max
    while hi - lo > tol_eta:
        mid = 0.5 * (lo + hi)
        vm = verdict(mid)
        if vm == CONNECTED:
            hi, v_hi = mid, vm
        else:
            lo, v_lo = mid, vm
    return EtaSearch(lo, hi, v_lo, v_hi, True, level, log)


# ---------------------------------------------------------------- boundary trace


@dataclass
class BoundaryTrace:
    arcs: list          # (start, end) angles, end may exceed 2*pi when wrapping
    arc_fraction: float
    level: int

    def centers(self) -> list:
        return [math.remainder(0.5 * (a + b), TWO_PI) for a, b in self.arcs]

    def to_json(self) -> dict:
        return {
            "schema": "innerlevel/v1",
            "kind": "boundary_trace",
            "arcs": [list(a) for a in self.arcs],
            "arc_fraction": self.arc_fraction,
            "level": self.level,
        }


def boundary_trace(raster: LevelSetRaster, include_uncertain: bool = False) -> BoundaryTrace:
    """Maximal angular runs of masked cells in the outermost ring."""
    g = raster.grid
    sl = g.ring_cells(g.n_rings - 1)
    member = (raster.optimistic_mask if include_uncertain else raster.mask)[sl]
    n = member.size
    step = TWO_PI / n
    if member.all():
        return BoundaryTrace([(0.0, TWO_PI)], 1.0, g.level)
    if not member.any():
        return BoundaryTrace([], 0.0, g.level)
    start = int(np.flatnonzero(~member)[0])
    order = np.roll(np.arange(n), -start)
    arcs = []
    run = None
    for j in order:
        if member[j]:
            if run is None:
                run = [j, j]
            else:
                run[1] = j
        elif run is not None:
            arcs.append(run)
            run = None
    if run is not None:
        arcs.append(run)
    out = []
    for a, b in arcs:
        lo = (a - 0.5) * step
        length = ((b - a) % n + 1) * step
        out.append((lo, lo + length))
    return BoundaryTrace(out, float(member.sum()) / n, g.level)
