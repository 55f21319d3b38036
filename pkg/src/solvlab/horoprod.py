"""Horocyclic products X1 x_h X2: Sol, Diestel-Leader graphs, X_n and X_Mbar.

A point is a pair (x1, x2) with h1(x1) + h2(x2) = 0.  For X_Mbar the
coordinates (v, t, y) split as x1 = (t, expanding block of v) in G_Mbar1 and
x2 = (-t, contracting block of v, tree vertex of y at height -t) in the
millefeuille factor; the tree height is minus t.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

from . import spaces
from .errors import HeightConstraintViolated, MalformedCoordinates, RadiusExceeded
from .madic import MAdic
from .spaces import GPoint, TreeVertex, ZPoint
from .spectral import SpectralSplit, analyze

SOL = "Sol"
DL = "DL"
XN = "Xn"
XMBAR = "XMbar"

DL_RADIUS_CAP = 14
# Metadata only: the continuous products carry the sqrt(2)-rescaled L2 path metric.
PATH_METRIC_RESCALE = math.sqrt(2)


def radius_cap(default):
    """Module BFS cap, optionally overridden by SOLVLAB_MAX_RADIUS."""
    env = os.environ.get("SOLVLAB_MAX_RADIUS")
    if not env:
        return default
    try:
        cap = int(env)
    except ValueError:
        raise ValueError(f"SOLVLAB_MAX_RADIUS must be an integer, got {env!r}") from None
    if cap < 0:
        raise ValueError("SOLVLAB_MAX_RADIUS must be non-negative")
    return cap


@dataclass(frozen=True, eq=False)
class ModelSpace:
    kind: str
    split: Optional[SpectralSplit] = None
    branching: tuple = ()

    @classmethod
    def sol(cls):
        return cls(SOL)

    @classmethod
    def dl(cls, n, m):
        return cls(DL, branching=(n, m))

    @classmethod
    def xn(cls, n):
        return cls(XN, split=analyze([[n]]), branching=(n,))

    @classmethod
    def xmbar(cls, M):
        split = M if isinstance(M, SpectralSplit) else analyze(M)
        return cls(XMBAR, split=split)

    @classmethod
    def parse(cls, text):
        """'sol', 'dl:2,2', 'xn:3', 'xmbar:[[2,0],[0,3]]'."""
        import json

        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "sol":
            return cls.sol()
        if kind == "dl":
            n, m = (int(x) for x in arg.split(","))
            return cls.dl(n, m)
        if kind == "xn":
            return cls.xn(int(arg))
        if kind == "xmbar":
            return cls.xmbar(json.loads(arg))
        raise ValueError(f"unknown model space {text!r}")

    @property
    def d(self):
        return self.split.det if self.split is not None else None

    @property
    def has_tree(self):
        return self.kind in (XN, XMBAR) and self.split.det > 1

    def factor_kinds(self):
        if self.kind == SOL:
            return ("G", "G")
        if self.kind == DL:
            return ("T", "T")
        s = self.split
        if s.det == 1:
            return ("G", "G")
        if s.n2 == 0:
            return ("G", "T")
        return ("G", "Z")


@dataclass(frozen=True)
class HPoint:
    x1: object
    x2: object
    t: float = field(init=False)

    def __post_init__(self):
        h1, h2 = self.x1.height, self.x2.height
        if isinstance(h1, int) and isinstance(h2, int):
            ok = h1 + h2 == 0
        else:
            ok = abs(float(h1) + float(h2)) <= 1e-12
        if not ok:
            raise HeightConstraintViolated(f"heights {h1} and {h2} do not cancel")
        object.__setattr__(self, "t", h1)


@dataclass(frozen=True)
class XPoint:
    """Coordinates (v, t, y) on X_Mbar; y is None when det M = 1."""

    v: tuple
    t: object
    y: Optional[MAdic] = None

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))


def _sol_mbar():
    return [math.e]


def make_point(space: ModelSpace, coords) -> HPoint:
    if space.kind == SOL:
        try:
            (x, t), (x2, t2) = coords
        except (TypeError, ValueError):
            raise MalformedCoordinates("Sol coordinates are ((x, t), (x', t'))") from None
        return HPoint(GPoint(t, (x,)), GPoint(t2, (x2,)))
    if space.kind == DL:
        try:
            u1, u2 = coords
        except (TypeError, ValueError):
            raise MalformedCoordinates("DL coordinates are a pair of tree vertices") from None
        n, m = space.branching
        if not (isinstance(u1, TreeVertex) and isinstance(u2, TreeVertex)) or (u1.m, u2.m) != (n, m):
            raise MalformedCoordinates(f"DL({n},{m}) needs vertices of T_{n + 1} and T_{m + 1}")
        return HPoint(u1, u2)
    if not isinstance(coords, XPoint):
        try:
            coords = XPoint(*coords)
        except TypeError:
            raise MalformedCoordinates("X_Mbar coordinates are (v, t, y)") from None
    s = space.split
    v, t, y = coords.v, coords.t, coords.y
    if len(v) != s.n:
        raise MalformedCoordinates(f"v must have {s.n} entries")
    x1 = GPoint(t, v[: s.n1])
    if s.det == 1:
        return HPoint(x1, GPoint(-t, v[s.n1:]))
    if t != int(t):
        raise MalformedCoordinates("t must be an integer when a tree factor is present")
    if not isinstance(y, MAdic) or y.m != s.det:
        raise MalformedCoordinates(f"y must be a {s.det}-adic number")
    tree = spaces.vertex_on_end(y, -int(t))
    x1 = GPoint(int(t), v[: s.n1])
    if s.n2 == 0:
        return HPoint(x1, tree)
    return HPoint(x1, ZPoint(tree, v[s.n1:]))


def coordinates(space: ModelSpace, p: HPoint):
    """Inverse of make_point (tree coordinates extended by the default digit)."""
    if space.kind == SOL:
        return ((p.x1.v[0], p.x1.t), (p.x2.v[0], p.x2.t))
    if space.kind == DL:
        return (p.x1, p.x2)
    s = space.split
    if s.det == 1:
        return XPoint(p.x1.v + p.x2.v, p.t, None)
    if s.n2 == 0:
        return XPoint(p.x1.v, p.t, spaces.tree_end(p.x2))
    return XPoint(p.x1.v + p.x2.v, p.t, spaces.tree_end(p.x2.tree))


def height(p: HPoint):
    return p.t


# -- Diestel-Leader graphs ---------------------------------------------------


def dl_neighbors(p: HPoint):
    u1, u2 = p.x1, p.x2
    up1, up2 = u1.parent(), u2.parent()
    out = [HPoint(up1, c) for c in u2.children()]
    out.extend(HPoint(c, up2) for c in u1.children())
    return out


def dl_distance(u: HPoint, v: HPoint, R=None) -> int:
    """Exact graph distance in DL(n, m) by bidirectional breadth-first search."""
    R = radius_cap(DL_RADIUS_CAP) if R is None else R
    if u == v:
        return 0
    dist_a, dist_b = {u: 0}, {v: 0}
    frontier_a, frontier_b = [u], [v]
    ra = rb = 0
    while ra + rb < R:
        # expand the smaller frontier
        if len(frontier_a) <= len(frontier_b):
            ra += 1
            frontier_a, hit = _expand(frontier_a, dist_a, dist_b, ra)
        else:
            rb += 1
            frontier_b, hit = _expand(frontier_b, dist_b, dist_a, rb)
        if hit is not None:
            return hit
        if not frontier_a or not frontier_b:
            break
    raise RadiusExceeded(f"DL distance exceeds {R}")


def _expand(frontier, dist, other, r):
    nxt = []
    best = None
    for x in frontier:
        for y in dl_neighbors(x):
            if y in dist:
                continue
            dist[y] = r
            nxt.append(y)
            if y in other:
                total = r + other[y]
                best = total if best is None else min(best, total)
    return nxt, best


def dl_distance_formula(u: HPoint, v: HPoint) -> int:
    """Closed form d_T1 + d_T2 - |height difference| (checked against BFS in tests)."""
    d1 = spaces.tree_distance(u.x1, v.x1)
    d2 = spaces.tree_distance(u.x2, v.x2)
    return d1 + d2 - abs(u.t - v.t)


def dl_ball(center: HPoint, radius: int) -> dict:
    dist = {center: 0}
    frontier = [center]
    for r in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for y in dl_neighbors(x):
                if y not in dist:
                    dist[y] = r
                    nxt.append(y)
        frontier = nxt
    return dist


def dl_origin(n, m):
    return HPoint(TreeVertex(n, 0), TreeVertex(m, 0))


# -- coarse surrogate ---------------------------------------------------------


def _factor_distance(x, y, lam):
    if isinstance(x, TreeVertex):
        return spaces.tree_distance(x, y)
    if isinstance(x, ZPoint):
        return spaces.coarse_distance_Z(x, y, lam)
    return spaces.coarse_distance_G(x, y, lam)


def coarse_distance(u: HPoint, v: HPoint, space: ModelSpace) -> float:
    if space.kind == SOL:
        lam1 = lam2 = _sol_mbar()
    elif space.kind == DL:
        lam1 = lam2 = None
    else:
        s = space.split
        lam1 = [s.Mbar1[i, i] for i in range(s.n1)]
        lam2 = [s.Mbar2[i, i] for i in range(s.n2)]
    return _factor_distance(u.x1, v.x1, lam1) + _factor_distance(u.x2, v.x2, lam2)
