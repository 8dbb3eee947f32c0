"""Möbius and pseudohyperbolic primitives on the unit disk."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

BOUNDARY_GUARD = 1e-12
TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


class Inconclusive(RuntimeError):
    """Raised when a sampled test lands within tolerance of its decision boundary."""


def normalize_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    # fmod can return exactly 2*pi after the shift for tiny negatives
    return 0.0 if t >= TWO_PI else t


def check_disk_point(z: complex, guard: float = BOUNDARY_GUARD) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise GeometryError(f"non-finite point {z!r}")
    if abs(z) >= 1.0 - guard:
        raise GeometryError(f"|z|={abs(z)!r} is not inside the disk (guard {guard:g})")
    return z


@dataclass(frozen=True)
class BoundaryPoint:
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise GeometryError("non-finite angle")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def zeta(self) -> complex:
        return cmath.exp(1j * self.theta)


@dataclass(frozen=True)
class PseudoDisk:
    center: complex
    radius: float

    def __post_init__(self):
        check_disk_point(self.center)
        if not 0.0 < self.radius < 1.0:
            raise GeometryError(f"pseudohyperbolic radius {self.radius} not in (0,1)")


@dataclass(frozen=True)
class EuclideanDisk:
    center: complex
    radius: float

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius


@dataclass(frozen=True)
class StolzCone:
    """Approach region {z: |arg(1 - z conj(zeta))| < half_aperture, |z| >= inner_radius}.

    ``half_aperture == 0`` is accepted as the degenerate radius.
    """

    vertex_theta: float
    half_aperture: float
    inner_radius: float

    def __post_init__(self):
        if not 0.0 <= self.half_aperture < math.pi / 2:
            raise GeometryError("half aperture must lie in [0, pi/2)")
        if not 0.0 < self.inner_radius < 1.0:
            raise GeometryError("inner radius must lie in (0, 1)")


def unit_factor(a: complex) -> complex:
    """|a|/a, computed from the argument so subnormal |a| stays exact in modulus."""
    return cmath.exp(-1j * cmath.phase(a))


def mobius_eval(a, z):
    """Evaluate the elementary factor phi_a(z) = (|a|/a)(a - z)/(1 - conj(a) z).

    ``phi_0`` is the identity.  Works elementwise on arrays.
    """
    a = complex(a)
    if not abs(a) < 1.0:
        raise GeometryError(f"|a|={abs(a)} must be < 1")
    if a == 0:
        return z if isinstance(z, np.ndarray) else complex(z)
    z_arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(z_arr) > 1.0 + 1e-12):
        raise GeometryError("mobius_eval needs |z| <= 1")
    out = unit_factor(a) * (a - z_arr) / (1.0 - a.conjugate() * z_arr)
    return out if isinstance(z, np.ndarray) else complex(out)


def mobius_derivative(a: complex, z, order: int = 1):
    """First or second derivative of phi_a."""
    a = complex(a)
    z = np.asarray(z, dtype=complex)
    if a == 0:
        return np.ones_like(z) if order == 1 else np.zeros_like(z)
    unit = unit_factor(a)
    den = 1.0 - a.conjugate() * z
    if order == 1:
        return -unit * (1.0 - abs(a) ** 2) / den**2
    if order == 2:
        return -unit * (1.0 - abs(a) ** 2) * 2.0 * a.conjugate() / den**3
    raise ValueError("order must be 1 or 2")


def pseudo_distance(z, w):
    """rho(z, w) = |z - w| / |1 - conj(w) z|; elementwise on arrays."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z) >= 1.0) or np.any(np.abs(w) >= 1.0):
        raise GeometryError("pseudo_distance needs points of the open disk")
    d = np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)
    return float(d) if d.ndim == 0 else d


def pseudo_disk_to_euclidean(d: PseudoDisk) -> EuclideanDisk:
    z0, r = d.center, d.radius
    den = 1.0 - r * r * abs(z0) ** 2
    return EuclideanDisk(center=z0 * (1.0 - r * r) / den, radius=r * (1.0 - abs(z0) ** 2) / den)


def distance_to_diameter(z) -> np.ndarray:
    """Closed form for inf over real x of rho(z, x)."""
    z = np.asarray(z, dtype=complex)
    # hyperbolic distance to the real geodesic: sinh(d) = 2|Im z| / (1 - |z|^2); rho = tanh(d/2)
    sh = 2.0 * np.abs(z.imag) / (1.0 - np.abs(z) ** 2)
    return np.tanh(0.5 * np.arcsinh(sh))


def _min_rho_to_axis(z: complex, xs: np.ndarray) -> float:
    vals = np.abs(z - xs) / np.abs(1.0 - xs * z)
    k = int(np.argmin(vals))
    lo = xs[max(k - 1, 0)]
    hi = xs[min(k + 1, len(xs) - 1)]
    best = float(vals[k])
    if hi > lo:
        res = minimize_scalar(
            lambda x: abs(z - x) / abs(1.0 - x * z),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-15 * max(1.0, 1.0 / (1.0 - abs(z)))},
        )
        best = min(best, float(res.fun))
    return best


def cone_samples(cone: StolzCone, n_samples: int = 4096, outer_gap: float = 1e-6) -> np.ndarray:
    """Sample the cone (rotated to vertex 1) on its two edges and interior rays."""
    n_rays = max(3, int(round(math.sqrt(n_samples))))
    n_depth = max(2, n_samples // n_rays)
    if cone.half_aperture == 0.0:
        psis = np.zeros(1)
    else:
        psis = np.linspace(-cone.half_aperture, cone.half_aperture, n_rays)
    # distance from the vertex, log spaced; the cone is cut to r0 <= |z| <= 1 - outer_gap
    ts = np.geomspace(outer_gap * 1e-3, 2.0, n_depth * 4)
    pts = (1.0 - ts[None, :] * np.exp(1j * psis[:, None])).ravel()
    mod = np.abs(pts)
    keep = (mod >= cone.inner_radius) & (mod <= 1.0 - outer_gap)
    pts = pts[keep]
    # always include the two corners on |z| = r0 and the deepest points of each edge
    extra = []
    for psi in ([-cone.half_aperture, cone.half_aperture] if cone.half_aperture else [0.0]):
        direction = np.exp(1j * psi)
        for target in (cone.inner_radius, 1.0 - outer_gap):
            t = _edge_parameter(direction, target)
            if t is not None:
                extra.append(1.0 - t * direction)
    if extra:
        pts = np.concatenate([pts, np.asarray(extra)])
    return pts


def _edge_parameter(direction: complex, radius: float):
    # solve |1 - t d| = radius for the smallest t > 0
    c = direction.real
    disc = c * c - (1.0 - radius * radius)
    if disc < 0:
        return None
    t = c - math.sqrt(disc)
    return t if t > 0 else None


def cone_in_union_test(
    cone: StolzCone,
    rho0: float,
    n_samples: int = 4096,
    n_axis: int = 1024,
    tol: float = 1e-9,
) -> bool:
    """Sampled check that the cone lies in the union of D_rho(x, rho0) over real x.

    Rotation invariance reduces the vertex to 1.  Raises ``Inconclusive`` when a
    sample sits within ``tol`` of the containment threshold.
    """
    if not 0.0 < rho0 < 1.0:
        raise GeometryError("rho0 must lie in (0, 1)")
    if n_samples < 100:
        raise GeometryError("need at least 100 cone samples")
    pts = cone_samples(cone, n_samples)
    # axis grid uniform in hyperbolic arclength so it stays fine near +-1
    xs = np.tanh(np.linspace(-12.0, 12.0, n_axis))
    coarse = np.empty(len(pts))
    for start in range(0, len(pts), 512):
        chunk = pts[start:start + 512, None]
        coarse[start:start + 512] = np.min(np.abs(chunk - xs) / np.abs(1.0 - xs * chunk), axis=1)
    # the grid minimum can only overestimate; refine samples that are not clearly inside
    for k in np.flatnonzero(coarse > rho0 - 10 * tol):
        coarse[k] = _min_rho_to_axis(complex(pts[k]), xs)
    close = np.abs(coarse - rho0) <= tol
    if np.any(close):
        z = pts[np.argmax(close)]
        raise Inconclusive(f"sample {z} lies within {tol} of rho0={rho0}")
    return bool(np.all(coarse < rho0))
