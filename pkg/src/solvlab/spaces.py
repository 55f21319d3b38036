"""Regular trees, the homogeneous spaces G_Mbar and millefeuille spaces.

Height conventions
------------------
Trees are oriented toward a fixed anchor end: every vertex has one parent
(one step *up*, height + 1) and ``m`` children.  A vertex is stored by its
height and the digits of the branch choices taken between it and the anchor
ray, lowest digit first; digit 0 always continues along the anchor ray, so
trailing zeros are dropped.

The Busemann function toward the anchor end is ``-height``.  The downward
ends (the parabolic boundary) are identified with Q_m by reading the digit
chosen at height j as the coefficient of ``m**(-j-1)``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import BranchingMismatch, HeightMismatch, TruncationTooSmall
from .madic import MAdic, PrecisionExhausted


@dataclass(frozen=True)
class TreeVertex:
    m: int
    h: int
    addr: tuple = ()

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("branching number must be >= 2")
        addr = tuple(int(d) for d in self.addr)
        if any(not 0 <= d < self.m for d in addr):
            raise ValueError(f"digits must lie in [0, {self.m})")
        while addr and addr[-1] == 0:
            addr = addr[:-1]
        object.__setattr__(self, "addr", addr)
        object.__setattr__(self, "h", int(self.h))

    @property
    def height(self):
        return self.h

    def parent(self):
        return TreeVertex(self.m, self.h + 1, self.addr[1:])

    def child(self, digit):
        return TreeVertex(self.m, self.h - 1, (digit,) + self.addr)

    def children(self):
        return [self.child(i) for i in range(self.m)]

    def neighbors(self):
        return [self.parent()] + self.children()

    def ancestor(self, height):
        """The unique vertex above (or equal to) self at the given height."""
        if height < self.h:
            raise ValueError("ancestor height below the vertex")
        return TreeVertex(self.m, height, self.addr[height - self.h:])

    def anchor_height(self):
        """Height at which the vertex's upward ray joins the anchor ray."""
        return self.h + len(self.addr)

    def to_literal(self):
        return "".join(str(d) for d in self.addr) + f"@{self.h}"

    @classmethod
    def parse(cls, m, text):
        body, h = text.strip().split("@")
        return cls(m, int(h), tuple(int(c, 36) for c in body))


def merge_height(u: TreeVertex, v: TreeVertex) -> int:
    if u.m != v.m:
        raise BranchingMismatch(f"branching {u.m} vs {v.m}")
    # above both anchor junctions the ancestors are anchor vertices
    top = max(u.h, v.h)
    cap = max(u.anchor_height(), v.anchor_height(), top)
    for H in range(top, cap + 1):
        if u.ancestor(H) == v.ancestor(H):
            return H
    return cap


def tree_distance(u: TreeVertex, v: TreeVertex) -> int:
    t0 = merge_height(u, v)
    return (t0 - u.h) + (t0 - v.h)


def tree_ball(center: TreeVertex, radius: int) -> list:
    """All vertices within graph distance ``radius`` (BFS order)."""
    return list(bfs_tree_distances(center, radius))


def bfs_tree_distances(center: TreeVertex, radius: int) -> dict:
    seen = {center: 0}
    queue = deque([center])
    while queue:
        x = queue.popleft()
        if seen[x] == radius:
            continue
        for y in x.neighbors():
            if y not in seen:
                seen[y] = seen[x] + 1
                queue.append(y)
    return seen


def tree_end(x: TreeVertex) -> MAdic:
    """Boundary point of the vertical geodesic through x (default digit 0 below)."""
    L = len(x.addr)
    return MAdic.from_digits(x.m, reversed(x.addr), val=-x.h - L, exact=True)


def vertex_on_end(y: MAdic, height: int) -> TreeVertex:
    """The vertex at ``height`` on the vertical geodesic of the end y."""
    lo = -height - 1
    if y.end is not None and lo >= y.end:
        raise PrecisionExhausted(f"end known only down to height {-y.end}")
    stop = min(y.val, lo + 1)
    addr = tuple(y.digit(p) for p in range(lo, stop - 1, -1))
    return TreeVertex(y.m, height, addr)


# -- homogeneous spaces ----------------------------------------------------


@dataclass(frozen=True)
class GPoint:
    t: float
    v: tuple

    def __post_init__(self):
        v = tuple(self.v) if np.ndim(self.v) else (self.v,)
        object.__setattr__(self, "v", v)
        if not all(math.isfinite(float(x)) for x in v) or not math.isfinite(float(self.t)):
            raise ValueError("GPoint coordinates must be finite")

    @property
    def height(self):
        return self.t

    def vec(self):
        return np.array([float(x) for x in self.v])


@dataclass(frozen=True)
class ZPoint:
    tree: TreeVertex
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))

    @property
    def height(self):
        return self.tree.h

    @property
    def gpoint(self):
        return GPoint(self.tree.h, self.v)


def _mbar_diag(mbar):
    """Accept a SpectralSplit, a diagonal matrix, or a vector of moduli."""
    if hasattr(mbar, "Mbar"):
        return np.diag(mbar.Mbar).astype(float)
    arr = np.asarray(mbar, dtype=float)
    if arr.ndim == 2:
        return np.diag(arr).copy()
    return np.atleast_1d(arr)


def horospherical_distance(p: GPoint, q: GPoint, split) -> float:
    if abs(float(p.t) - float(q.t)) > 1e-12:
        raise HeightMismatch(f"heights {p.t} and {q.t} differ")
    lam = _mbar_diag(split)
    dv = p.vec() - q.vec()
    return float(np.linalg.norm(lam ** (-float(p.t)) * dv))


def _eigen_groups(lam):
    groups = []
    for i, x in enumerate(lam):
        for g in groups:
            if abs(math.log(lam[g[0]]) - math.log(x)) <= 1e-9:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def coarse_distance_G(p: GPoint, q: GPoint, split) -> float:
    """Quasi-isometric surrogate for the left-invariant metric of G_Mbar.

    The pair first climbs to the height b where every eigen-block of the
    difference has shrunk to unit size, so the value is 2b - t_p - t_q.
    """
    lam = _mbar_diag(split)
    if np.any(lam <= 1.0):
        raise ValueError("coarse distance needs all moduli > 1")
    dv = p.vec() - q.vec()
    b = max(float(p.t), float(q.t))
    for g in _eigen_groups(lam):
        norm = float(np.linalg.norm(dv[g]))
        if norm > 0:
            b = max(b, math.log(norm) / math.log(lam[g[0]]))
    return (b - float(p.t)) + (b - float(q.t))


def coarse_distance_Z(p: ZPoint, q: ZPoint, split) -> float:
    return tree_distance(p.tree, q.tree) + coarse_distance_G(p.gpoint, q.gpoint, split)


def distance(x, y, split=None):
    """Dispatch: exact tree metric or coarse G / Z surrogate."""
    if isinstance(x, TreeVertex):
        return tree_distance(x, y)
    if isinstance(x, GPoint):
        return coarse_distance_G(x, y, split)
    if isinstance(x, ZPoint):
        return coarse_distance_Z(x, y, split)
    raise TypeError(f"unsupported point type {type(x).__name__}")


def anchor_ray(x):
    """Default reference ray ell(T): the anchor ray / the v = 0 vertical line."""
    if isinstance(x, TreeVertex):
        return lambda T: TreeVertex(x.m, T, ())
    if isinstance(x, GPoint):
        zero = (0.0,) * len(x.v)
        return lambda T: GPoint(T, zero)
    if isinstance(x, ZPoint):
        zero = (0.0,) * len(x.v)
        return lambda T: ZPoint(TreeVertex(x.tree.m, T, ()), zero)
    raise TypeError(f"unsupported point type {type(x).__name__}")


def horofunction(x, T, ray=None, split=None, tol=1e-12):
    """d(x, ray(T)) - T, checked for stabilization against T - 1."""
    ray = ray or anchor_ray(x)
    value = distance(x, ray(T), split) - T
    prev = distance(x, ray(T - 1), split) - (T - 1)
    if abs(value - prev) > tol:
        raise TruncationTooSmall(f"horofunction not yet stable at T={T}")
    return value


def stabilization_margin(x, split=None):
    """A truncation height above which horofunction(x, T) is stable."""
    if isinstance(x, TreeVertex):
        return x.anchor_height() + 1
    if isinstance(x, (GPoint, ZPoint)):
        g = x if isinstance(x, GPoint) else x.gpoint
        lam = _mbar_diag(split)
        b = float(g.t)
        norm = float(np.linalg.norm(g.vec()))
        if norm > 0:
            b = max(b, math.log(norm) / math.log(float(np.min(lam))))
        extra = x.tree.anchor_height() if isinstance(x, ZPoint) else b
        return int(math.ceil(max(b, extra))) + 1
    raise TypeError(f"unsupported point type {type(x).__name__}")


def vertical_geodesic(x):
    """Boundary address of the vertical geodesic through x."""
    if isinstance(x, TreeVertex):
        return tree_end(x)
    if isinstance(x, GPoint):
        return x.v
    if isinstance(x, ZPoint):
        return (tree_end(x.tree), x.v)
    raise TypeError(f"unsupported point type {type(x).__name__}")
