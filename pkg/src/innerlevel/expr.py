"""Expression trees for inner functions and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .geometry import GeometryError, normalize_angle
from .sequences import ExplicitZeros, Punctured, ZeroSequence, sequence_from_json

SCHEMA = "innerlevel/v1"


class ExprError(ValueError):
    pass


class InnerExpr:
    """Base node.  Nodes are immutable and hashable."""

    def to_json(self) -> dict:
        raise NotImplementedError

    def __mul__(self, other):
        return product(self, other)

    def __call__(self, z):
        from .evaluate import eval_disk

        return eval_disk(self, z).value


@dataclass(frozen=True)
class Blaschke(InnerExpr):
    zeros: ZeroSequence

    def to_json(self):
        return {"type": "blaschke", "zeros": self.zeros.to_json()}


@dataclass(frozen=True)
class Singular(InnerExpr):
    """exp(-sum_k c_k (zeta_k + z)/(zeta_k - z)) for atoms (theta_k, c_k)."""

    atoms: tuple

    def __post_init__(self):
        cleaned = []
        seen = set()
        for theta, weight in self.atoms:
            theta = normalize_angle(float(theta))
            weight = float(weight)
            if not weight > 0:
                raise ExprError("atom weights must be positive")
            key = round(theta, 14)
            if key in seen:
                raise ExprError(f"duplicate atom at angle {theta}")
            seen.add(key)
            cleaned.append((theta, weight))
        if not cleaned:
            raise ExprError("a singular factor needs at least one atom")
        object.__setattr__(self, "atoms", tuple(cleaned))

    def to_json(self):
        return {"type": "singular", "atoms": [{"theta": t, "weight": c} for t, c in self.atoms]}


@dataclass(frozen=True)
class Identity(InnerExpr):
    def to_json(self):
        return {"type": "identity"}


@dataclass(frozen=True)
class Unimodular(InnerExpr):
    theta: float = 0.0

    def to_json(self):
        return {"type": "unimodular", "theta": self.theta}


@dataclass(frozen=True)
class Product(InnerExpr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ExprError("empty product")

    def to_json(self):
        return {"type": "product", "factors": [f.to_json() for f in self.factors]}


@dataclass(frozen=True)
class Compose(InnerExpr):
    outer: InnerExpr
    inner: InnerExpr

    def to_json(self):
        return {"type": "compose", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


@dataclass(frozen=True)
class MobiusShift(InnerExpr):
    """phi_a composed with child."""

    a: complex
    child: InnerExpr

    def __post_init__(self):
        a = complex(self.a)
        if not abs(a) < 1.0:
            raise ExprError(f"shift parameter |a|={abs(a)} must be < 1")
        object.__setattr__(self, "a", a)

    def to_json(self):
        return {"type": "mobius_shift", "a": {"re": self.a.real, "im": self.a.imag}, "child": self.child.to_json()}


@dataclass(frozen=True)
class Reflected(InnerExpr):
    """z -> child(-z)."""

    child: InnerExpr

    def to_json(self):
        return {"type": "reflected", "child": self.child.to_json()}


# ---------------------------------------------------------------- constructors


def blaschke(*zeros) -> Blaschke:
    """Finite Blaschke product from zeros; repeated arguments raise multiplicity."""
    counts: dict[complex, int] = {}
    for a in zeros:
        counts[complex(a)] = counts.get(complex(a), 0) + 1
    return Blaschke(ExplicitZeros(tuple(counts.items())))


def power(k: int) -> Blaschke:
    return Blaschke(ExplicitZeros(((0j, k),)))


def atomic(theta: float = 0.0, weight: float = 1.0) -> Singular:
    return Singular(((theta, weight),))


def product(*factors: InnerExpr) -> InnerExpr:
    flat = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def compose(outer: InnerExpr, inner: InnerExpr) -> Compose:
    return Compose(outer, inner)


def frostman_shift(u: InnerExpr, a: complex) -> MobiusShift:
    return MobiusShift(a, u)


def reflect(u: InnerExpr) -> Reflected:
    return Reflected(u)


def remove_zero(theta: InnerExpr, a: complex, tol: float = 1e-14) -> InnerExpr:
    """Divide out one factor phi_a from a structural Blaschke factor of theta."""
    a = complex(a)
    nodes = list(theta.factors) if isinstance(theta, Product) else [theta]
    for i, node in enumerate(nodes):
        if not isinstance(node, Blaschke):
            continue
        reduced = _drop_zero(node.zeros, a, tol)
        if reduced is None:
            continue
        if reduced is _EMPTY:
            replacement = Unimodular(0.0)
        else:
            replacement = Blaschke(reduced)
        rest = nodes[:i] + [replacement] + nodes[i + 1:]
        rest = [n for n in rest if not (isinstance(n, Unimodular) and n.theta == 0.0)] or [Unimodular(0.0)]
        return product(*rest)
    raise ExprError(f"zero {a} not present in any structural Blaschke factor")


_EMPTY = object()


def _drop_zero(seq: ZeroSequence, a: complex, tol: float):
    if isinstance(seq, ExplicitZeros):
        entries = list(seq.entries)
        for k, (b, m) in enumerate(entries):
            if abs(b - a) <= tol:
                if m > 1:
                    entries[k] = (b, m - 1)
                else:
                    del entries[k]
                return ExplicitZeros(tuple(entries)) if entries else _EMPTY
        return None
    depth = seq.max_depth
    zs = seq.zeros(depth)
    hits = [k for k in range(len(zs)) if abs(zs[k] - a) <= tol]
    if not hits:
        return None
    if isinstance(seq, Punctured):
        # map the hit back to the base index
        base_idx = [i for i in range(1, seq.base.max_depth + 1) if i not in seq.removed]
        return Punctured(seq.base, seq.removed + (base_idx[hits[0]],))
    return Punctured(seq, (hits[0] + 1,))


# ---------------------------------------------------------------- JSON


def from_json(doc) -> InnerExpr:
    if isinstance(doc, str):
        doc = json.loads(doc)
    t = doc.get("type")
    try:
        if t == "blaschke":
            return Blaschke(sequence_from_json(doc["zeros"]))
        if t == "singular":
            return Singular(tuple((a["theta"], a.get("weight", 1.0)) for a in doc["atoms"]))
        if t == "identity":
            return Identity()
        if t == "unimodular":
            return Unimodular(float(doc.get("theta", 0.0)))
        if t == "product":
            return Product(tuple(from_json(f) for f in doc["factors"]))
        if t == "compose":
            return Compose(from_json(doc["outer"]), from_json(doc["inner"]))
        if t == "mobius_shift":
            a = doc["a"]
            a = complex(a["re"], a.get("im", 0.0)) if isinstance(a, dict) else complex(a)
            return MobiusShift(a, from_json(doc["child"]))
        if t == "reflected":
            return Reflected(from_json(doc["child"]))
    except (KeyError, TypeError, GeometryError) as exc:
        raise ExprError(f"malformed {t!r} node: {exc}") from exc
    raise ExprError(f"unknown node type {t!r}")


def to_json_text(u: InnerExpr) -> str:
    return json.dumps(u.to_json(), sort_keys=True)


def walk(u: InnerExpr):
    yield u
    if isinstance(u, Product):
        for f in u.factors:
            yield from walk(f)
    elif isinstance(u, Compose):
        yield from walk(u.outer)
        yield from walk(u.inner)
    elif isinstance(u, (MobiusShift, Reflected)):
        yield from walk(u.child)


def is_finite(u: InnerExpr) -> bool:
    """True when no infinite Blaschke product occurs anywhere in the tree."""
    return all(not isinstance(n, Blaschke) or n.zeros.length is not None for n in walk(u))


def is_constant(u: InnerExpr) -> bool:
    if isinstance(u, Unimodular):
        return True
    if isinstance(u, Blaschke):
        return u.zeros.length == 0
    if isinstance(u, Product):
        return all(is_constant(f) for f in u.factors)
    if isinstance(u, (MobiusShift, Reflected)):
        return is_constant(u.child)
    if isinstance(u, Compose):
        return is_constant(u.outer) or is_constant(u.inner)
    return False


def angle_gap(a: float, b: float) -> float:
    """Arc distance between two angles."""
    d = abs(normalize_angle(a) - normalize_angle(b))
    return min(d, 2 * math.pi - d)
