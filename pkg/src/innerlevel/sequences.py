"""Blaschke zero sequences with computable tail bounds.

Every sequence exposes its zeros in a fixed order together with
``tail_bound(N) >= sum_{j>N} (1 - |a_j|)`` and a lower bound for the distance
from a point to every zero beyond index N (through the convex hull of the tail).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# a zero is only usable while its distance to the circle is resolved in double precision
_MIN_COMPLEMENT = 1e-15


class SequenceError(ValueError):
    pass


class ZeroSequence:
    kind: str

    @property
    def length(self) -> Optional[int]:
        """Number of zeros, or None when infinite."""
        raise NotImplementedError

    @property
    def max_depth(self) -> int:
        """Largest index whose zero is representable as a float strictly inside the disk."""
        raise NotImplementedError

    def zeros(self, n: int) -> np.ndarray:
        """The first n zeros, multiplicities expanded."""
        raise NotImplementedError

    def complements(self, n: int) -> np.ndarray:
        """1 - |a_j| for the first n zeros, computed without cancellation where possible."""
        return 1.0 - np.abs(self.zeros(n))

    def tail_bound(self, n: int) -> float:
        raise NotImplementedError

    def tail_distance(self, z, n: int) -> np.ndarray:
        """Lower bound for min_{j>n} |z - a_j| (elementwise in z)."""
        raise NotImplementedError

    def accumulation_points(self) -> list[float]:
        """Angles of the boundary points where the zeros accumulate."""
        return []

    def to_json(self) -> dict:
        raise NotImplementedError

    def blaschke_sum(self) -> float:
        """sum (1 - |a_j|) to within the tail bound at max depth."""
        n = self.max_depth
        return float(np.sum(self.complements(n))) + self.tail_bound(n)


def _segment_distance(z, p: complex, q: complex) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    d = q - p
    if d == 0:
        return np.abs(z - p)
    t = np.clip(((z - p) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (p + t * d))


@dataclass(frozen=True, eq=True)
class ExplicitZeros(ZeroSequence):
    entries: tuple  # ((a, multiplicity), ...)
    kind: str = "explicit"

    def __post_init__(self):
        cleaned = []
        for a, m in self.entries:
            a = complex(a)
            m = int(m)
            if not abs(a) < 1.0:
                raise SequenceError(f"zero {a} is not inside the disk")
            if m < 1:
                raise SequenceError("multiplicity must be >= 1")
            cleaned.append((a, m))
        object.__setattr__(self, "entries", tuple(cleaned))

    @property
    def length(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def max_depth(self) -> int:
        return self.length

    def zeros(self, n: int) -> np.ndarray:
        flat = [a for a, m in self.entries for _ in range(m)]
        return np.asarray(flat[:n], dtype=complex)

    def tail_bound(self, n: int) -> float:
        z = self.zeros(self.length)
        return float(np.sum(1.0 - np.abs(z[n:])))

    def tail_distance(self, z, n: int) -> np.ndarray:
        rest = self.zeros(self.length)[n:]
        z = np.asarray(z, dtype=complex)
        if rest.size == 0:
            return np.full(z.shape, np.inf)
        return np.min(np.abs(z[..., None] - rest), axis=-1)

    def to_json(self) -> dict:
        return {
            "kind": "explicit",
            "zeros": [{"re": a.real, "im": a.imag, "multiplicity": m} for a, m in self.entries],
        }


@dataclass(frozen=True, eq=True)
class GeometricZeros(ZeroSequence):
    """a_n = 1 - q**n, n >= 1."""

    q: float
    kind: str = "geometric"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise SequenceError("q must lie in (0, 1)")

    @property
    def length(self):
        return None

    @property
    def max_depth(self) -> int:
        n = int(math.floor(math.log(_MIN_COMPLEMENT) / math.log(self.q)))
        while n > 1 and not (1.0 - self.q**n < 1.0):
            n -= 1
        return n

    def zeros(self, n: int) -> np.ndarray:
        n = min(n, self.max_depth)
        k = np.arange(1, n + 1, dtype=float)
        return (1.0 - self.q**k).astype(complex)

    def complements(self, n: int) -> np.ndarray:
        n = min(n, self.max_depth)
        return self.q ** np.arange(1, n + 1, dtype=float)

    def tail_bound(self, n: int) -> float:
        return self.q ** (n + 1) / (1.0 - self.q)

    def tail_distance(self, z, n: int) -> np.ndarray:
        return _segment_distance(z, 1.0 - self.q ** (n + 1), 1.0)

    def accumulation_points(self) -> list[float]:
        return [0.0]

    def to_json(self) -> dict:
        return {"kind": "geometric", "q": self.q}


@dataclass(frozen=True, eq=True)
class FactorialZeros(ZeroSequence):
    """a_n = 1 - 1/n!, n >= 1 (so a_1 = 0)."""

    kind: str = "factorial"

    @property
    def length(self):
        return None

    @property
    def max_depth(self) -> int:
        n = 1
        while 1.0 / math.factorial(n + 1) >= _MIN_COMPLEMENT:
            n += 1
        return n

    def complements(self, n: int) -> np.ndarray:
        n = min(n, self.max_depth)
        return np.array([1.0 / math.factorial(k) for k in range(1, n + 1)])

    def zeros(self, n: int) -> np.ndarray:
        return (1.0 - self.complements(n)).astype(complex)

    def tail_bound(self, n: int) -> float:
        # sum_{j>n} 1/j! <= (1/(n+1)!) * (n+2)/(n+1)
        return (n + 2) / ((n + 1) * math.factorial(n + 1))

    def tail_distance(self, z, n: int) -> np.ndarray:
        return _segment_distance(z, 1.0 - 1.0 / math.factorial(n + 1), 1.0)

    def accumulation_points(self) -> list[float]:
        return [0.0]

    def to_json(self) -> dict:
        return {"kind": "factorial"}


@dataclass(frozen=True, eq=True)
class NegatedMirror(ZeroSequence):
    """Zeros of base interleaved with their negatives: a_1, -a_1, a_2, -a_2, ..."""

    base: ZeroSequence
    kind: str = "negated_mirror"

    @property
    def length(self):
        n = self.base.length
        return None if n is None else 2 * n

    @property
    def max_depth(self) -> int:
        return 2 * self.base.max_depth

    def zeros(self, n: int) -> np.ndarray:
        n = min(n, self.max_depth)
        b = self.base.zeros((n + 1) // 2)
        out = np.empty(2 * len(b), dtype=complex)
        out[0::2] = b
        out[1::2] = -b
        return out[:n]

    def complements(self, n: int) -> np.ndarray:
        n = min(n, self.max_depth)
        c = self.base.complements((n + 1) // 2)
        return np.repeat(c, 2)[:n]

    def tail_bound(self, n: int) -> float:
        m = n // 2
        if n % 2 == 0:
            return 2.0 * self.base.tail_bound(m)
        return self.base.tail_bound(m) + self.base.tail_bound(m + 1)

    def tail_distance(self, z, n: int) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        # n zeros consumed: ceil(n/2) positive copies, floor(n/2) negative ones
        m = n // 2
        return np.minimum(self.base.tail_distance(z, m), self.base.tail_distance(-z, m))

    def accumulation_points(self) -> list[float]:
        pts = set()
        for t in self.base.accumulation_points():
            pts.add(t)
            pts.add(math.fmod(t + math.pi, 2 * math.pi))
        return sorted(pts)

    def to_json(self) -> dict:
        return {"kind": "negated_mirror", "base": self.base.to_json()}


@dataclass(frozen=True, eq=True)
class Punctured(ZeroSequence):
    """Base sequence with the zeros at the given 1-based indices removed."""

    base: ZeroSequence
    removed: tuple
    kind: str = "punctured"

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.removed)))
        if not idx or idx[0] < 1:
            raise SequenceError("removed indices must be >= 1")
        if self.base.length is not None and idx[-1] > self.base.length:
            raise SequenceError("removed index beyond the sequence")
        object.__setattr__(self, "removed", idx)

    @property
    def length(self):
        n = self.base.length
        return None if n is None else n - len(self.removed)

    @property
    def max_depth(self) -> int:
        return self.base.max_depth - len(self.removed)

    def _keep(self, n: int) -> np.ndarray:
        total = min(n + len(self.removed), self.base.max_depth)
        mask = np.ones(total, dtype=bool)
        for i in self.removed:
            if i <= total:
                mask[i - 1] = False
        return mask

    def zeros(self, n: int) -> np.ndarray:
        mask = self._keep(n)
        return self.base.zeros(len(mask))[mask][:n]

    def complements(self, n: int) -> np.ndarray:
        mask = self._keep(n)
        return self.base.complements(len(mask))[mask][:n]

    # the j-th remaining zero has base index >= j, so the base tail dominates
    def tail_bound(self, n: int) -> float:
        if self.base.length is not None:
            return float(np.sum(self.complements(self.length)[n:]))
        return self.base.tail_bound(n)

    def tail_distance(self, z, n: int) -> np.ndarray:
        if self.base.length is not None:
            rest = self.zeros(self.length)[n:]
            z = np.asarray(z, dtype=complex)
            if rest.size == 0:
                return np.full(z.shape, np.inf)
            return np.min(np.abs(z[..., None] - rest), axis=-1)
        return self.base.tail_distance(z, n)

    def accumulation_points(self) -> list[float]:
        return self.base.accumulation_points()

    def to_json(self) -> dict:
        return {"kind": "punctured", "base": self.base.to_json(), "removed": list(self.removed)}


def sequence_from_json(doc: dict) -> ZeroSequence:
    kind = doc.get("kind")
    if kind == "explicit":
        entries = []
        for item in doc["zeros"]:
            if isinstance(item, dict):
                entries.append((complex(item.get("re", 0.0), item.get("im", 0.0)), item.get("multiplicity", 1)))
            else:
                entries.append((complex(item[0], item[1]), item[2] if len(item) > 2 else 1))
        return ExplicitZeros(tuple(entries))
    if kind == "geometric":
        return GeometricZeros(float(doc["q"]))
    if kind == "factorial":
        return FactorialZeros()
    if kind == "negated_mirror":
        return NegatedMirror(sequence_from_json(doc["base"]))
    if kind == "punctured":
        return Punctured(sequence_from_json(doc["base"]), tuple(doc["removed"]))
    raise SequenceError(f"unknown zero sequence kind {kind!r}")
