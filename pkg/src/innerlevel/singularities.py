"""Boundary spectrum Sing(u) of an expression tree."""

from __future__ import annotations

import copy
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Blaschke, Compose, Identity, InnerExpr, MobiusShift, Product, Reflected, Singular, Unimodular, angle_gap
from .geometry import TWO_PI, normalize_angle

FINITE = "finite"
COUNTABLE = "countable_with_listed_accumulations"
UNRESOLVED = "unresolved"

_RANK = {FINITE: 0, COUNTABLE: 1, UNRESOLVED: 2}


@dataclass
class SingSet:
    """Listed singular points (angles).

    ``atoms`` are isolated listed points; ``accumulation_points`` are points
    where zeros or listed atoms pile up.  Inside ``window`` (arc length) of an
    accumulation point the listing is incomplete.
    """

    atoms: list = field(default_factory=list)
    accumulation_points: list = field(default_factory=list)
    description: str = FINITE
    window: float = 0.0
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.atoms = _dedupe(self.atoms)
        self.accumulation_points = _dedupe(self.accumulation_points)
        # an accumulation point is not also listed as an atom
        self.atoms = [a for a in self.atoms if all(angle_gap(a, b) > 1e-12 for b in self.accumulation_points)]

    @property
    def points(self) -> list:
        return sorted(self.atoms + self.accumulation_points)

    @property
    def is_empty(self) -> bool:
        return not self.atoms and not self.accumulation_points

    def clearance(self, theta: float, exclusion_radius: float):
        """(gap, point) for the first listed point closer than allowed, else (None, None)."""
        for a in self.atoms:
            g = angle_gap(theta, a)
            if g < exclusion_radius:
                return g, a
        for a in self.accumulation_points:
            g = angle_gap(theta, a)
            if g < max(exclusion_radius, self.window):
                return g, a
        return None, None

    def distance(self, theta) -> np.ndarray:
        """Arc distance from each angle to the nearest listed point (inf if empty)."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        pts = self.points
        if not pts:
            return np.full(theta.shape, np.inf)
        d = np.abs(np.remainder(theta[:, None] - np.asarray(pts)[None, :] + math.pi, TWO_PI) - math.pi)
        return d.min(axis=1)

    def to_json(self) -> dict:
        return {
            "atoms": list(self.atoms),
            "accumulation_points": list(self.accumulation_points),
            "description": self.description,
            "window": self.window,
            "notes": list(self.notes),
        }


def _dedupe(angles, tol: float = 1e-9) -> list:
    out: list = []
    for a in sorted(normalize_angle(float(x)) for x in angles):
        if not out or angle_gap(a, out[-1]) > tol:
            out.append(a)
    if len(out) > 1 and angle_gap(out[0], out[-1]) <= tol:
        out.pop()
    return out


def _union(parts: list[SingSet]) -> SingSet:
    if not parts:
        return SingSet()
    return SingSet(
        atoms=[a for p in parts for a in p.atoms],
        accumulation_points=[a for p in parts for a in p.accumulation_points],
        description=max((p.description for p in parts), key=_RANK.__getitem__),
        window=max(p.window for p in parts),
        notes=[n for p in parts for n in p.notes],
    )


def sing_set(u: InnerExpr, grid_size: int = 2**16, exclusion_radius: float = 1e-3) -> SingSet:
    """Sing(u); results are memoised per expression (preimage search is costly)."""
    try:
        cached = _sing_cached(u, grid_size, exclusion_radius)
    except TypeError:  # unhashable node
        return _sing_set(u, grid_size, exclusion_radius)
    return copy.deepcopy(cached)


@functools.lru_cache(maxsize=256)
def _sing_cached(u, grid_size, exclusion_radius):
    return _sing_set(u, grid_size, exclusion_radius)


def _sing_set(u: InnerExpr, grid_size: int, exclusion_radius: float) -> SingSet:
    if isinstance(u, Blaschke):
        return SingSet(accumulation_points=u.zeros.accumulation_points())
    if isinstance(u, Singular):
        return SingSet(atoms=[t for t, _ in u.atoms])
    if isinstance(u, (Identity, Unimodular)):
        return SingSet()
    if isinstance(u, Product):
        return _union([sing_set(f, grid_size, exclusion_radius) for f in u.factors])
    if isinstance(u, MobiusShift):
        return sing_set(u.child, grid_size, exclusion_radius)
    if isinstance(u, Reflected):
        s = sing_set(u.child, grid_size, exclusion_radius)
        return SingSet(
            atoms=[a + math.pi for a in s.atoms],
            accumulation_points=[a + math.pi for a in s.accumulation_points],
            description=s.description,
            window=s.window,
            notes=list(s.notes),
        )
    if isinstance(u, Compose):
        return _compose_sing(u.outer, u.inner, grid_size, exclusion_radius)
    raise TypeError(f"not an inner-function node: {u!r}")


def _compose_sing(outer: InnerExpr, inner: InnerExpr, grid_size: int, exclusion_radius: float) -> SingSet:
    from .expr import is_constant

    s_in = sing_set(inner, grid_size, exclusion_radius)
    s_out = sing_set(outer, grid_size, exclusion_radius)
    if is_constant(inner):
        return SingSet()
    if s_out.is_empty:
        return s_in
    targets = s_out.points
    pre = boundary_preimages(inner, targets, s_in, grid_size, exclusion_radius)
    atoms = list(s_in.atoms) + pre.roots
    acc = list(s_in.accumulation_points)
    description = max(s_in.description, s_out.description, key=_RANK.__getitem__)
    if not s_in.is_empty:
        # the argument of a non-constant inner function is unbounded at each of its
        # singular points, so every one of them is a limit of preimages
        acc += s_in.atoms
        description = max(description, COUNTABLE, key=_RANK.__getitem__)
    if pre.unresolved:
        description = UNRESOLVED
    notes = list(s_in.notes) + [
        f"preimages of {len(targets)} point(s): {len(pre.roots)} found on a {grid_size}-point sweep; "
        f"search window excludes arc radius {pre.window:.3g} around Sing(inner)"
    ]
    if pre.unresolved:
        notes.append(f"unresolved: {pre.unresolved} stretch(es) of the sweep failed to evaluate")
    return SingSet(
        atoms=atoms,
        accumulation_points=acc,
        description=description,
        window=max(s_in.window, pre.window),
        notes=notes,
    )


@dataclass
class Preimages:
    roots: list
    window: float
    unresolved: int


def boundary_preimages(
    v: InnerExpr,
    targets: list,
    s_v: SingSet | None = None,
    grid_size: int = 2**16,
    exclusion_radius: float = 1e-3,
    max_step_phase: float = 1.0,
) -> Preimages:
    """Angles theta with v(e^{i theta}) = e^{i psi} for psi in targets.

    The boundary argument of an inner function increases strictly, so roots are
    bracketed by crossings of the unwrapped phase and refined by bisection.
    Only stretches where the phase advances less than ``max_step_phase`` per grid
    step are searched.
    """
    from .evaluate import evaluate

    if s_v is None:
        s_v = sing_set(v, grid_size, exclusion_radius)
    theta = np.arange(grid_size) * (TWO_PI / grid_size)
    step = TWO_PI / grid_size
    dist = s_v.distance(theta)
    usable = dist >= exclusion_radius
    val = np.zeros(grid_size, dtype=complex)
    der = np.full(grid_size, np.inf)
    if usable.any():
        jet = evaluate(v, np.exp(1j * theta[usable]), 1, 1e-12)
        val[usable] = jet.f[0]
        der_u = np.abs(jet.f[1])
        der_u[~jet.ok] = np.inf
        der[usable] = der_u
    resolved = usable & (der * step < max_step_phase)
    bad = ~resolved
    window = float(dist[bad].max()) if bad.any() and np.isfinite(dist[bad]).any() else 0.0
    unresolved = 0
    if bad.any() and s_v.is_empty:
        unresolved = int(bad.sum())
    far_bad = bad & (dist > 0.25)
    if far_bad.any():
        unresolved += int(far_bad.sum())

    roots: list = []
    for psi in targets:
        target = complex(math.cos(psi), math.sin(psi))
        ph = np.angle(val * np.conj(target))
        nxt = np.roll(ph, -1)
        pair = resolved & np.roll(resolved, -1)
        # crossing of zero from below, not the +-pi wrap
        cross = pair & (ph < 0) & (nxt >= 0) & (nxt - ph < math.pi)
        idx = np.flatnonzero(cross)
        if idx.size == 0:
            continue
        lo = theta[idx].copy()
        hi = lo + step
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            pm = np.angle(evaluate(v, np.exp(1j * mid), 0, 1e-13).f[0] * np.conj(target))
            below = pm < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        roots.extend(float(normalize_angle(x)) for x in 0.5 * (lo + hi))
    return Preimages(roots=_dedupe(roots), window=window, unresolved=unresolved)
