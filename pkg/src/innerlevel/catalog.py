"""Named inner functions with their expected class membership."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .expr import (
    SCHEMA,
    Blaschke,
    InnerExpr,
    atomic,
    blaschke,
    compose,
    power,
    product,
    reflect,
    Singular,
)
from .sequences import FactorialZeros, GeometricZeros, NegatedMirror
from .singularities import COUNTABLE, FINITE

ONE_COMPONENT = "one_component"
NOT_ONE_COMPONENT = "not_one_component"
UNSPECIFIED = "unspecified"

# entries whose numerical verdict may legitimately stay inconclusive
MIRROR_FAMILY = ("mirror_b", "u_tilde", "v_tilde", "theta_tilde")


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    expr: InnerExpr
    expected_status: str
    expected_sing: dict
    provenance: str
    notes: str = ""
    tags: tuple = field(default=())

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "expr": self.expr.to_json(),
            "expected_status": self.expected_status,
            "expected_sing": self.expected_sing,
            "provenance": self.provenance,
            "notes": self.notes,
        }


def _finite(*atoms) -> dict:
    return {"description": FINITE, "atoms": [float(a) for a in atoms], "accumulation_points": []}


def _accumulating(*acc) -> dict:
    """Finitely many singular points, each a limit of zeros."""
    return {"description": FINITE, "atoms": [], "accumulation_points": [float(a) for a in acc]}


def _countable(acc, atoms=()) -> dict:
    return {"description": COUNTABLE, "atoms": list(atoms), "accumulation_points": [float(a) for a in acc]}


def _roots_of_unity(n: int) -> list:
    return [2 * math.pi * j / n for j in range(n)]


def _build() -> dict:
    S = atomic(0.0, 1.0)
    b = Blaschke(GeometricZeros(0.5))
    v = Blaschke(FactorialZeros())
    mirror = Blaschke(NegatedMirror(FactorialZeros()))
    u_t = product(S, mirror)
    v_t = product(reflect(S), mirror)
    entries = [
        CatalogEntry("atomic_S", S, ONE_COMPONENT, _finite(0.0), "atomic singular function with one atom at 1"),
        CatalogEntry("geometric_b", b, ONE_COMPONENT, _accumulating(0.0),
                     "interpolating Blaschke product with zeros 1-2^-n (real-zero criterion)"),
        CatalogEntry("factorial_v", v, NOT_ONE_COMPONENT, _accumulating(0.0),
                     "thin Blaschke product with zeros 1-1/n!"),
        CatalogEntry("theta_Sv", product(S, v), ONE_COMPONENT, _accumulating(0.0),
                     "product of the atomic function with the thin Blaschke product"),
        CatalogEntry("mirror_b", mirror, UNSPECIFIED, _accumulating(0.0, math.pi),
                     "v(z)v(-z) for the thin product v"),
        CatalogEntry("u_tilde", u_t, NOT_ONE_COMPONENT, _accumulating(0.0, math.pi),
                     "atomic function times v(z)v(-z)", tags=("mirror",)),
        CatalogEntry("v_tilde", v_t, NOT_ONE_COMPONENT, _accumulating(0.0, math.pi),
                     "reflected atomic function times v(z)v(-z)", tags=("mirror",)),
        CatalogEntry("theta_tilde", product(u_t, v_t), ONE_COMPONENT, _accumulating(0.0, math.pi),
                     "product of the two mirror factors", tags=("mirror",)),
        CatalogEntry("b_compose_S", compose(b, S), ONE_COMPONENT, _countable([0.0]),
                     "interpolating product composed with the atomic function; Sing = S^-1(1) with 1"),
        CatalogEntry("S_compose_b", compose(S, b), ONE_COMPONENT, _countable([0.0]),
                     "atomic function composed with the interpolating product"),
    ]
    for n in (1, 2, 3):
        roots = _roots_of_unity(n)
        entries.append(CatalogEntry(
            f"finite_atoms_{n}", Singular(tuple((t, 1.0) for t in roots)), ONE_COMPONENT, _finite(*roots),
            f"singular function with unit atoms at the {n}-th roots of unity",
        ))
    for k in (1, 2, 3):
        entries.append(CatalogEntry(f"finite_blaschke_{k}", power(k), ONE_COMPONENT, _finite(),
                                    f"z^{k}"))
    entries.append(CatalogEntry("finite_blaschke_pair", blaschke(0.5, -0.5), ONE_COMPONENT, _finite(),
                                "zeros at 0.5 and -0.5"))
    entries.append(CatalogEntry("finite_blaschke_mixed", blaschke(0.5, complex(-0.3, 0.4), complex(0, 0.7)),
                                ONE_COMPONENT, _finite(), "three scattered zeros"))
    out = {}
    for e in entries:
        if e.id in out:
            raise RuntimeError(f"duplicate catalog id {e.id}")
        out[e.id] = e
    return out


_ENTRIES = _build()


def get_entry(entry_id: str) -> CatalogEntry:
    try:
        return _ENTRIES[entry_id]
    except KeyError:
        raise KeyError(f"unknown catalog id {entry_id!r}") from None


def list_entries() -> list:
    return list(_ENTRIES)


def catalog_json() -> dict:
    return {"schema": SCHEMA, "entries": [e.to_json() for e in _ENTRIES.values()]}
