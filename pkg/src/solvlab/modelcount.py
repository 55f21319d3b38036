"""Integer arithmetic deciding which model spaces a tree lattice can share."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ._arith import iroot
from .errors import ProperPowerBase


def primitive_root(m: int):
    """(r, i) with m = r**i and r not a proper power."""
    if m < 2:
        raise ValueError("need m >= 2")
    for i in range(m.bit_length(), 1, -1):
        r = iroot(m, i)
        if r is not None and r >= 2:
            base, j = primitive_root(r)
            return base, i * j
    return m, 1


def is_proper_power(m: int) -> bool:
    return primitive_root(m)[1] > 1


def common_base(m: int, p: int) -> Optional[tuple]:
    """(r, i, j) with m = r**i, p = r**j and r primitive, or None."""
    if m < 2 or p < 2:
        raise ValueError("need m, p >= 2")
    r, i = primitive_root(m)
    s, j = primitive_root(p)
    if r != s:
        return None
    return (r, i, j)


def admissible_exponents(d: int, kmax: int) -> list:
    """Positive k <= kmax with d**k an integer; for primitive d that is 1..kmax."""
    if d < 2:
        raise ValueError("need d >= 2")
    if is_proper_power(d):
        r, i = primitive_root(d)
        raise ProperPowerBase(f"{d} = {r}^{i}; reduce to base {r} first")
    # a rational k = a/b in lowest terms with d**k integral forces b = 1
    return list(range(1, kmax + 1))


@dataclass(frozen=True)
class GraphOfGroupsDatum:
    """Indices of a one-edge, one-vertex graph of groups: d = |sHs^-1 : H|,
    e = |H' : s^-1 H' s|, and the chain indices f = |H' : H|, g = |H : s^-1 H' s|."""

    d: int
    e: int
    f: int
    g: int

    def __post_init__(self):
        if min(self.d, self.e, self.f, self.g) < 1:
            raise ValueError("indices must be >= 1")


@dataclass(frozen=True)
class IndexResult:
    consistent: bool
    value: Optional[int] = None

    def __str__(self):
        return f"Consistent(e=fg=d={self.value})" if self.consistent else "Inconsistent"


def index_identity_check(datum: GraphOfGroupsDatum) -> IndexResult:
    fg = datum.f * datum.g
    if datum.d == fg and datum.e == fg:
        return IndexResult(True, fg)
    return IndexResult(False)


__all__ = [
    "primitive_root",
    "is_proper_power",
    "common_base",
    "admissible_exponents",
    "GraphOfGroupsDatum",
    "IndexResult",
    "index_identity_check",
]
