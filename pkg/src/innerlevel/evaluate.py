"""Evaluation and differentiation of inner-function expression trees.

Everything is computed as a jet ``(f, f', f'')`` over numpy arrays of points,
each entry paired with an absolute error bound.  Infinite Blaschke products are
truncated adaptively.  Writing the tail as ``T = prod_{j>N} (1 + w_j)`` with
``w_j = phi_{a_j} - 1``,

    |w_j|   <= 2 (1 - |a_j|) / D,   |w_j'| <= 2 (1 - |a_j|) / D**2,
    |w_j''| <= 4 (1 - |a_j|) / D**3,

where ``D = max(1 - |z|, dist(z, tail zeros))`` (``|1 - conj(a) z|`` dominates
both on the closed disk).  With ``S_k`` the summed majorants,
``|T - 1| <= expm1(S0)``, ``|T'| <= S1 exp(S0)`` and
``|T''| <= (S2 + S1**2) exp(S0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import (
    Blaschke,
    Compose,
    Identity,
    InnerExpr,
    MobiusShift,
    Product,
    Reflected,
    Singular,
    Unimodular,
)
from .geometry import BOUNDARY_GUARD, BoundaryPoint, GeometryError, check_disk_point, unit_factor
from .sequences import ExplicitZeros, ZeroSequence

UNIT_ROUNDOFF = 2.0**-52
MAX_EXTRAPOLATED_DEPTH = 100_000


class EvaluationError(ArithmeticError):
    pass


class TruncationError(EvaluationError):
    def __init__(self, message: str, required_depth: int | None = None):
        super().__init__(message)
        self.required_depth = required_depth


class SingularityError(EvaluationError):
    def __init__(self, message: str, offending: float | None = None):
        super().__init__(message)
        self.offending = offending


@dataclass
class EvalResult:
    value: complex
    abs_error_bound: float


@dataclass
class Jet:
    f: list
    e: list
    ok: np.ndarray

    @property
    def order(self) -> int:
        return len(self.f) - 1


def _targets(f: list, eps) -> list:
    # absolute tolerance on values, mixed absolute/relative on derivatives
    return [np.broadcast_to(eps, f[0].shape)] + [eps * (1.0 + np.abs(fk)) for fk in f[1:]]


def _finalize(f: list, e: list, eps, ok=None) -> Jet:
    tg = _targets(f, eps)
    good = np.ones(f[0].shape, dtype=bool) if ok is None else ok.copy()
    for ek, tk in zip(e, tg):
        good &= ek <= tk
    return Jet(f, e, good)


def _mul(f: list, g: list) -> list:
    out = [f[0] * g[0]]
    if len(f) > 1:
        out.append(f[1] * g[0] + f[0] * g[1])
    if len(f) > 2:
        out.append(f[2] * g[0] + 2.0 * f[1] * g[1] + f[0] * g[2])
    return out


def _mul_err(f: list, ef: list, g: list, eg: list) -> list:
    """Error bound for the product jet given bounds on both factor jets."""

    def term(i, j):
        return np.abs(f[i]) * eg[j] + np.abs(g[j]) * ef[i] + ef[i] * eg[j]

    out = [term(0, 0)]
    if len(f) > 1:
        out.append(term(1, 0) + term(0, 1))
    if len(f) > 2:
        out.append(term(2, 0) + 2.0 * term(1, 1) + term(0, 2))
    return out


def _factor_jet(a: complex, z: np.ndarray, order: int) -> list:
    if a == 0:
        out = [z.copy(), np.ones_like(z), np.zeros_like(z)]
        return out[: order + 1]
    unit = unit_factor(a)
    den = 1.0 - a.conjugate() * z
    out = [unit * (a - z) / den]
    if order >= 1:
        d1 = -unit * (1.0 - abs(a) ** 2) / den**2
        out.append(d1)
        if order >= 2:
            out.append(d1 * 2.0 * a.conjugate() / den)
    return out


def truncation_error_bounds(seq: ZeroSequence, z: np.ndarray, n: int, p: list) -> list:
    """Bounds on |f_k - p_k| when the product is cut after n zeros and p is the partial jet."""
    if seq.length is not None and n >= seq.length:
        return [np.zeros(z.shape) for _ in p]
    t = seq.tail_bound(n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        d = np.maximum(1.0 - np.abs(z), seq.tail_distance(z, n))
        s0 = 2.0 * t / d
        grow = np.exp(s0)
        out = [np.abs(p[0]) * np.expm1(s0)]
        if len(p) > 1:
            s1 = 2.0 * t / d**2
            e1 = s1 * grow
            out.append(np.abs(p[1]) * np.expm1(s0) + np.abs(p[0]) * e1)
            if len(p) > 2:
                s2 = 4.0 * t / d**3
                e2 = (s2 + s1 * s1) * grow
                out.append(np.abs(p[2]) * np.expm1(s0) + 2.0 * np.abs(p[1]) * e1 + np.abs(p[0]) * e2)
    return [np.where(np.isnan(o), np.inf, o) for o in out]


def _blaschke_jet(seq: ZeroSequence, z: np.ndarray, order: int, eps) -> Jet:
    finite = seq.length is not None
    max_n = seq.length if finite else seq.max_depth
    if finite:
        target = max_n
    else:
        target = _initial_depth(seq, z, eps, max_n)

    zeros = seq.zeros(max_n)
    p = [np.ones_like(z)] + [np.zeros_like(z) for _ in range(order)]
    mag = [np.ones(z.shape)] + [np.zeros(z.shape) for _ in range(order)]
    n = 0
    while True:
        for a in zeros[n:target]:
            fj = _factor_jet(complex(a), z, order)
            p = _mul(p, fj)
            mag = _mul(mag, [np.abs(x) for x in fj])
        n = target
        err = truncation_error_bounds(seq, z, n, p)
        rnd = [4.0 * (n + 2) * UNIT_ROUNDOFF * m for m in mag]
        total = [a + b for a, b in zip(err, rnd)]
        jet = _finalize(p, total, eps)
        if finite or jet.ok.all() or n >= max_n:
            return jet
        target = min(max_n, max(n + 1, 2 * n))


def _tail_ok(seq: ZeroSequence, z: np.ndarray, n: int, eps) -> np.ndarray:
    t = seq.tail_bound(n)
    with np.errstate(divide="ignore", over="ignore"):
        d = np.maximum(1.0 - np.abs(z), seq.tail_distance(z, n))
        s0 = 2.0 * t / d
        return np.expm1(s0) <= 0.5 * np.broadcast_to(eps, z.shape)


def _initial_depth(seq: ZeroSequence, z: np.ndarray, eps, max_n: int) -> int:
    reachable = int(np.count_nonzero(_tail_ok(seq, z, max_n, eps)))
    lo, hi = 1, max_n
    while lo < hi:
        mid = (lo + hi) // 2
        if np.count_nonzero(_tail_ok(seq, z, mid, eps)) >= reachable:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _singular_jet(node: Singular, z: np.ndarray, order: int, eps) -> Jet:
    g = [np.zeros_like(z) for _ in range(order + 1)]
    scale = [np.zeros(z.shape) for _ in range(order + 1)]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for theta, c in node.atoms:
            zeta = complex(math.cos(theta), math.sin(theta))
            diff = zeta - z
            g[0] = g[0] - c * (zeta + z) / diff
            scale[0] = scale[0] + c * np.abs(zeta + z) / np.abs(diff)
            if order >= 1:
                t1 = -2.0 * c * zeta / diff**2
                g[1] = g[1] + t1
                scale[1] = scale[1] + np.abs(t1)
            if order >= 2:
                t2 = -4.0 * c * zeta / diff**3
                g[2] = g[2] + t2
                scale[2] = scale[2] + np.abs(t2)
        under = g[0].real < -700.0
        s0 = np.where(under, 0.0, np.exp(np.where(under, 0.0, g[0])))
        f = [s0]
        if order >= 1:
            f.append(np.where(under, 0.0, g[1] * s0))
        if order >= 2:
            f.append(np.where(under, 0.0, (g[2] + g[1] ** 2) * s0))
        a0 = np.abs(s0)
        rel = 8.0 * UNIT_ROUNDOFF * (1.0 + scale[0])
        e = [rel * a0]
        if order >= 1:
            e.append(rel * scale[1] * a0 + 8.0 * UNIT_ROUNDOFF * np.abs(f[1]))
        if order >= 2:
            e.append(rel * (scale[2] + scale[1] ** 2) * a0 + 8.0 * UNIT_ROUNDOFF * np.abs(f[2]))
        e = [np.where(under, 1e-300, x) for x in e]
    bad = ~np.isfinite(f[0])
    for fk in f[1:]:
        bad |= ~np.isfinite(fk)
    return _finalize(f, e, eps, ok=~bad)


def _compose_jet(outer: InnerExpr, inner: InnerExpr, z: np.ndarray, order: int, eps) -> Jet:
    eps = np.broadcast_to(np.asarray(eps, dtype=float), z.shape)
    eps_inner = 0.5 * eps
    for _ in range(3):
        jv = _jet(inner, z, order, eps_inner)
        w = jv.f[0]
        mod = np.abs(w)
        w = np.where(mod > 1.0, w / np.where(mod > 0, mod, 1.0), w)
        mod = np.minimum(mod, 1.0)
        ju = _jet(outer, w, min(order + 1, 2), 0.5 * eps)
        ev0 = jv.e[0]
        interior = mod + ev0 < 1.0 - 1e-9
        with np.errstate(divide="ignore", invalid="ignore"):
            # interior: the better of Schwarz-Pick and a Taylor bound with Cauchy's
            # estimate |u''| <= 2/R^2 on the segment; elsewhere a sampled estimate
            reach = np.maximum(1.0 - mod - ev0, 1e-300)
            taylor = np.abs(ju.f[1]) + ju.e[1] + ev0 / reach**2
            pick = 1.0 / (1.0 - (mod + ev0) ** 2)
            lip = np.where(interior, np.minimum(pick, taylor), 2.0 * np.abs(ju.f[1]) + 1.0)
        need = lip * ev0 > 0.5 * eps
        if not need.any():
            break
        eps_inner = np.where(need, 0.5 * eps / (lip * 1.01), eps_inner)
        if np.all(eps_inner[need] < 1e-300):
            break

    u = ju.f
    v = jv.f
    eu = ju.e
    evv = jv.e
    f = [u[0]]
    e = [eu[0] + lip * ev0]
    if order >= 1:
        f.append(u[1] * v[1])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # |u''| <= 6/R^3 on the segment bounds the second-order remainder of u'
            drift = np.where(interior, 3.0 * ev0**2 / reach**3, 0.0)
        e.append((eu[1] + np.abs(u[2]) * ev0 + drift) * np.abs(v[1]) + np.abs(u[1]) * evv[1])
    if order >= 2:
        f.append(u[2] * v[1] ** 2 + u[1] * v[2])
        with np.errstate(divide="ignore", invalid="ignore"):
            sampled = 3.0 * np.abs(u[2]) ** 2 / np.maximum(np.abs(u[1]), 1e-300) + np.abs(u[2])
            cauchy = 6.0 / np.maximum(1.0 - mod, 1e-300) ** 3
            k3 = np.where(interior, np.minimum(cauchy, sampled), sampled)
        a1 = np.abs(v[1])
        e.append(
            (eu[2] + k3 * ev0) * a1**2
            + np.abs(u[2]) * (2.0 * a1 * evv[1] + evv[1] ** 2)
            + (eu[1] + np.abs(u[2]) * ev0) * np.abs(v[2])
            + np.abs(u[1]) * evv[2]
        )
    e = [np.where(np.isnan(x), np.inf, x) for x in e]
    return _finalize(f, e, eps, ok=jv.ok & ju.ok)


def _jet(node: InnerExpr, z: np.ndarray, order: int, eps) -> Jet:
    if isinstance(node, Blaschke):
        return _blaschke_jet(node.zeros, z, order, eps)
    if isinstance(node, Singular):
        return _singular_jet(node, z, order, eps)
    if isinstance(node, Identity):
        f = [z.copy(), np.ones_like(z), np.zeros_like(z)][: order + 1]
        return Jet(f, [np.zeros(z.shape) for _ in f], np.ones(z.shape, dtype=bool))
    if isinstance(node, Unimodular):
        c = complex(math.cos(node.theta), math.sin(node.theta))
        f = [np.full(z.shape, c)] + [np.zeros_like(z) for _ in range(order)]
        return Jet(f, [np.zeros(z.shape) for _ in f], np.ones(z.shape, dtype=bool))
    if isinstance(node, Product):
        k = len(node.factors)
        child_eps = np.asarray(eps) / (2.0 * k)
        jets = [_jet(c, z, order, child_eps) for c in node.factors]
        f, e, ok = jets[0].f, jets[0].e, jets[0].ok.copy()
        for j in jets[1:]:
            e = _mul_err(f, e, j.f, j.e)
            f = _mul(f, j.f)
            ok &= j.ok
        return _finalize(f, e, eps, ok=ok)
    if isinstance(node, Compose):
        return _compose_jet(node.outer, node.inner, z, order, eps)
    if isinstance(node, MobiusShift):
        return _compose_jet(Blaschke(ExplicitZeros(((node.a, 1),))), node.child, z, order, eps)
    if isinstance(node, Reflected):
        j = _jet(node.child, -z, order, eps)
        f = list(j.f)
        if order >= 1:
            f[1] = -f[1]
        return Jet(f, j.e, j.ok)
    raise TypeError(f"not an inner-function node: {node!r}")


# ---------------------------------------------------------------- public API


def evaluate(u: InnerExpr, z, order: int = 0, eps: float = 1e-12) -> Jet:
    """Vectorised jet of u at the points z (closed disk).  Never raises on accuracy;
    consult ``Jet.ok`` for points where the tolerance was met."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise GeometryError("points must lie in the closed unit disk")
    return _jet(u, z, order, eps)


def truncation_depth(seq: ZeroSequence, z, eps: float) -> int:
    """Smallest N whose tail satisfies the truncation bound at z."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    z = check_disk_point(z)
    if seq.length is not None:
        return seq.length
    za = np.asarray([z])

    def good(n):
        t = seq.tail_bound(n)
        d = max(1.0 - abs(z), float(seq.tail_distance(za, n)[0]))
        x = 2.0 * t / d
        return x < 700.0 and math.expm1(x) <= eps

    for n in range(0, seq.max_depth + 1):
        if good(n):
            return n
    n = seq.max_depth
    while n < MAX_EXTRAPOLATED_DEPTH and not good(n):
        n += 1
    raise TruncationError(
        f"tail bound needs depth {n} but the sequence is representable only to {seq.max_depth}",
        required_depth=n,
    )


def eval_disk(u: InnerExpr, z, eps: float = 1e-12) -> EvalResult:
    z = check_disk_point(z)
    jet = evaluate(u, z, 0, eps)
    if not jet.ok[0]:
        raise TruncationError(f"could not reach eps={eps:g} at z={z} (bound {jet.e[0][0]:.3g})")
    return EvalResult(complex(jet.f[0][0]), float(jet.e[0][0]))


def eval_disk_array(u: InnerExpr, z, eps: float = 1e-12):
    """Values, error bounds and success mask for many interior points."""
    jet = evaluate(u, z, 0, eps)
    return jet.f[0], jet.e[0], jet.ok


def _as_theta(xi) -> float:
    if isinstance(xi, BoundaryPoint):
        return xi.theta
    return BoundaryPoint(float(xi)).theta


def check_clearance(u: InnerExpr, theta: float, exclusion_radius: float, sing=None) -> None:
    from .singularities import sing_set

    s = sing if sing is not None else sing_set(u)
    gap, where = s.clearance(theta, exclusion_radius)
    if gap is not None:
        raise SingularityError(
            f"boundary point {theta} is within {gap:.3g} of the singular point {where}", offending=where
        )


def boundary_jet(u: InnerExpr, xi, order: int, eps: float = 1e-10, exclusion_radius: float = 1e-3, sing=None) -> Jet:
    theta = _as_theta(xi)
    check_clearance(u, theta, exclusion_radius, sing)
    jet = evaluate(u, np.exp(1j * theta), order, eps)
    if not jet.ok[0]:
        raise TruncationError(f"could not reach eps={eps:g} at boundary angle {theta}")
    return jet


def eval_boundary(u: InnerExpr, xi, eps: float = 1e-12, exclusion_radius: float = 1e-3, sing=None) -> complex:
    return complex(boundary_jet(u, xi, 0, eps, exclusion_radius, sing).f[0][0])


def boundary_derivative(
    u: InnerExpr, xi, order: int = 1, eps: float = 1e-10, exclusion_radius: float = 1e-3, sing=None
) -> complex:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return complex(boundary_jet(u, xi, order, eps, exclusion_radius, sing).f[order][0])


def blaschke_boundary_derivative_modulus(seq: ZeroSequence, xi, eps: float = 1e-12) -> float:
    """|B'(xi)| as the series sum (1 - |a_n|^2)/|a_n - xi|^2 with a controlled tail."""
    theta = _as_theta(xi)
    x = complex(math.cos(theta), math.sin(theta))
    xa = np.asarray([x])
    n = seq.length if seq.length is not None else seq.max_depth
    comp = seq.complements(n)
    zs = seq.zeros(n)
    terms = comp * (2.0 - comp) / np.abs(zs - x) ** 2

    def tail(k):
        if seq.length is not None and k >= seq.length:
            return 0.0
        d = float(seq.tail_distance(xa, k)[0])
        if d <= 0.0:
            return math.inf
        # (1 - |a|^2) <= 2 (1 - |a|)
        return 2.0 * seq.tail_bound(k) / d**2

    for k in range(0, n + 1):
        if tail(k) <= eps:
            return float(np.sum(terms[:k]))
    for acc in seq.accumulation_points():
        if abs(math.remainder(theta - acc, 2 * math.pi)) < 1e-12:
            raise SingularityError(f"series diverges at accumulation point {acc}", offending=acc)
    raise TruncationError(f"tail bound {tail(n):.3g} exceeds eps={eps:g} at the deepest representable zero")


def compose_ratio_A(u: InnerExpr, v: InnerExpr, zeta, eps: float = 1e-10, verify: bool = False,
                    exclusion_radius: float = 1e-3, tol: float = 1e-9):
    """(u o v)'' / ((u o v)')^2 at a boundary point via the chain-rule split.

    With ``verify`` the left side is also computed from the composed tree and a
    pair ``(rhs, lhs)`` is returned; a mismatch beyond ``tol`` raises.
    """
    from .expr import Compose as _Compose

    theta = _as_theta(zeta)
    point = np.exp(1j * theta)
    comp = _Compose(u, v)
    check_clearance(comp, theta, exclusion_radius)
    jv = evaluate(v, point, 2, eps)
    w = jv.f[0]
    w = w / max(abs(w[0]), 1.0)
    ju = evaluate(u, w, 2, eps)
    if not (jv.ok[0] and ju.ok[0]):
        raise TruncationError("could not reach the requested accuracy for the composition ratio")
    u1, u2 = complex(ju.f[1][0]), complex(ju.f[2][0])
    v1, v2 = complex(jv.f[1][0]), complex(jv.f[2][0])
    rhs = u2 / u1**2 + (1.0 / u1) * v2 / v1**2
    if not verify:
        return rhs
    jc = evaluate(comp, point, 2, eps)
    lhs = complex(jc.f[2][0]) / complex(jc.f[1][0]) ** 2
    if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
        raise EvaluationError(f"composition ratio mismatch: lhs={lhs} rhs={rhs}")
    return rhs, lhs


__all__ = [
    "BOUNDARY_GUARD",
    "EvalResult",
    "EvaluationError",
    "Jet",
    "SingularityError",
    "TruncationError",
    "blaschke_boundary_derivative_modulus",
    "boundary_derivative",
    "boundary_jet",
    "compose_ratio_A",
    "eval_boundary",
    "eval_disk",
    "eval_disk_array",
    "evaluate",
    "truncation_depth",
]
