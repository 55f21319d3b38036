"""Abelian-by-cyclic groups Gamma_M, BS(1,n) and lamplighters F wr Z.

Gamma_M elements are normal forms ``a^k b^u`` stored as ``(k, u)`` with ``u``
an exact rational vector in Z[M^-1]^n.  The product is

    (k, u) * (l, w) = (k + l, M^-l u + w),

which gives ``a b_j a^-1 = b^(M e_j)``.  Lamplighter elements are
``(pos, lamps)`` with ``(p, f) * (q, g) = (p + q, f + g(. - p))``.
"""
from __future__ import annotations

import itertools
import json
import math
import random
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import spaces
from ._arith import frac_part, mat_power, matvec
from .errors import DepthExceeded, RadiusExceeded, RelationViolated, SearchBudgetExceeded
from .horoprod import XPoint, radius_cap
from .madic import MAdic
from .spaces import TreeVertex
from .spectral import SpectralSplit, analyze, orthogonal_power

WORD_RADIUS_CAP = 12
MAX_TREE_DEPTH = 512


# -- Gamma_M ------------------------------------------------------------------


class AbcGroup:
    """Gamma_M = <a, b_1..b_n | a b_i a^-1 = phi_M(b_i), [b_i, b_j] = 1>."""

    def __init__(self, M, name=None):
        self.split = M if isinstance(M, SpectralSplit) else analyze(M)
        self.M = tuple(tuple(r) for r in self.split.M)
        self.n = len(self.M)
        self.d = self.split.det
        self.name = name or f"abc:{json.dumps([list(r) for r in self.M])}"
        self._powers = {}
        self._ball = None
        self._ball_lock = threading.Lock()
        self._tree = None

    def __repr__(self):
        return f"AbcGroup({self.name})"

    def M_power(self, j):
        if j not in self._powers:
            self._powers[j] = mat_power(self.M, j)
        return self._powers[j]

    def element(self, k, u=None):
        if u is None:
            u = (0,) * self.n
        return AbcElement(int(k), tuple(Fraction(x) for x in u), self)

    def identity(self):
        return self.element(0)

    def a(self):
        return self.element(1)

    def b(self, j=1):
        u = [0] * self.n
        u[j - 1] = 1
        return self.element(0, u)

    def generators(self):
        """Named generators with inverses: a, a^-1, b_j, b_j^-1."""
        gens = {"a": self.a(), "a^-1": self.a().inverse()}
        for j in range(1, self.n + 1):
            name = "b" if self.n == 1 else f"b{j}"
            gens[name] = self.b(j)
            gens[name + "^-1"] = self.b(j).inverse()
        return gens

    def phi(self, j):
        """phi_M(b_j) = b^(M e_j)."""
        return self.element(0, [self.M[i][j - 1] for i in range(self.n)])

    def multiply(self, g, h):
        gu = g.u if h.k == 0 else matvec(self.M_power(-h.k), g.u)
        u = tuple(x + y for x, y in zip(gu, h.u))
        return AbcElement(g.k + h.k, u, self)

    def inverse(self, g):
        # (k, u)^-1 = (-k, -M^k u)
        Mk = self.M_power(g.k)
        return AbcElement(-g.k, tuple(-x for x in matvec(Mk, g.u)), self)

    def word(self, text):
        return parse_word(self, text)

    # word metric ----------------------------------------------------------
    def ball(self, radius):
        return _cached_ball(self, radius)

    def word_length(self, g, R=None):
        return word_length(g, R)

    @property
    def tree(self):
        if self._tree is None:
            self._tree = BassSerreTree(self)
        return self._tree


@dataclass(frozen=True)
class AbcElement:
    k: int
    u: tuple
    group: AbcGroup = field(compare=False, repr=False)

    def __mul__(self, other):
        return self.group.multiply(self, other)

    def inverse(self):
        return self.group.inverse(self)

    def __pow__(self, e):
        out = self.group.identity()
        base = self if e >= 0 else self.inverse()
        for _ in range(abs(e)):
            out = out * base
        return out

    def is_identity(self):
        return self.k == 0 and all(x == 0 for x in self.u)

    def __str__(self):
        us = ",".join(str(x) for x in self.u)
        return f"(k={self.k}; u=[{us}])"


def multiply(g, h):
    return g * h


# -- lamplighters -----------------------------------------------------------------


class LampGroup:
    """(Z/q) wr Z with standard generators {t, delta} or DL generators {delta^i t}."""

    def __init__(self, q=2):
        if q < 2:
            raise ValueError("lamp group order must be >= 2")
        self.q = q
        self.name = f"ll:{q}"
        self._balls = {}
        self._ball_lock = threading.Lock()

    def __repr__(self):
        return f"LampGroup({self.q})"

    def element(self, pos=0, lamps=None):
        lamps = lamps or {}
        items = tuple(sorted((int(p), int(v) % self.q) for p, v in dict(lamps).items() if int(v) % self.q))
        return LampElement(int(pos), items, self)

    def identity(self):
        return self.element()

    def t(self):
        return self.element(1)

    def delta(self, value=1):
        return self.element(0, {0: value})

    def generators(self, kind="standard"):
        if kind == "standard":
            gens = {"t": self.t(), "t^-1": self.t().inverse()}
            for i in range(1, self.q):
                gens["d" if i == 1 else f"d{i}"] = self.delta(i)
            return gens
        if kind == "dl":
            gens = {}
            for i in range(self.q):
                s = self.delta(i) * self.t()
                gens[f"s{i}"] = s
                gens[f"s{i}^-1"] = s.inverse()
            return gens
        raise ValueError(f"unknown generating set {kind!r}")

    def multiply(self, g, h):
        lamps = dict(g.lamps)
        for p, v in h.lamps:
            key = p + g.pos
            lamps[key] = (lamps.get(key, 0) + v) % self.q
        return self.element(g.pos + h.pos, lamps)

    def inverse(self, g):
        return self.element(-g.pos, {p - g.pos: -v for p, v in g.lamps})

    def flip(self, g):
        """The order-2 automorphism t -> delta t, delta -> delta (swaps the two DL generators when q = 2)."""
        # image of (p, f) is f * (delta t)^p
        lamps = dict(g.lamps)
        if g.pos >= 0:
            rng, step = range(0, g.pos), 1
        else:
            rng, step = range(g.pos, 0), -1
        for p in rng:
            lamps[p] = (lamps.get(p, 0) + step) % self.q
        return self.element(g.pos, lamps)

    def word(self, text):
        return parse_word(self, text)

    def ball(self, radius, kind="standard"):
        return _cached_ball(self, radius, kind)


@dataclass(frozen=True)
class LampElement:
    pos: int
    lamps: tuple
    group: LampGroup = field(compare=False, repr=False)

    def __mul__(self, other):
        return self.group.multiply(self, other)

    def inverse(self):
        return self.group.inverse(self)

    def is_identity(self):
        return self.pos == 0 and not self.lamps

    def __str__(self):
        lamps = ",".join(f"{p}:{v}" for p, v in self.lamps)
        return f"(pos={self.pos}; lamps={{{lamps}}})"


def lamp_to_dl(g: LampElement):
    """DL(q,q) vertex of a lamplighter element.

    Left tree: height -pos, digits f(pos-1), f(pos-2), ...;
    right tree: height pos, digits f(pos), f(pos+1), ....
    """
    from .horoprod import HPoint

    q = g.group.q
    f = dict(g.lamps)
    lo = min([p for p in f] + [g.pos])
    hi = max([p for p in f] + [g.pos])
    left = tuple(f.get(p, 0) for p in range(g.pos - 1, lo - 1, -1))
    right = tuple(f.get(p, 0) for p in range(g.pos, hi + 1))
    return HPoint(TreeVertex(q, -g.pos, left), TreeVertex(q, g.pos, right))


def dl_to_lamp(group: LampGroup, p):
    pos = p.x2.h
    lamps = {}
    for i, dgt in enumerate(p.x1.addr):
        lamps[pos - 1 - i] = dgt
    for i, dgt in enumerate(p.x2.addr):
        lamps[pos + i] = dgt
    return group.element(pos, lamps)


# -- words and balls --------------------------------------------------------------


def parse_word(group, text):
    """Whitespace-separated generator names, each optionally followed by ^k."""
    if isinstance(group, AbcGroup):
        gens = group.generators()
        gens.setdefault("b1", group.b(1))
        for j in range(1, group.n + 1):
            gens[f"b_{j}"] = group.b(j)
    else:
        gens = dict(group.generators("standard"))
        gens.update(group.generators("dl"))
    out = group.identity()
    for tok in text.split():
        name, _, exp = tok.partition("^")
        e = int(exp) if exp else 1
        if name not in gens:
            raise ValueError(f"unknown generator {name!r}")
        g = gens[name]
        step = g if e >= 0 else g.inverse()
        for _ in range(abs(e)):
            out = out * step
    return out


def _gens_for(group, kind):
    if isinstance(group, AbcGroup):
        return list(group.generators().values())
    return list(group.generators(kind).values())


def _cached_ball(group, radius, kind="standard"):
    """Map element -> word length for the ball of the given radius (memoized)."""
    key = kind if isinstance(group, LampGroup) else "std"
    with group._ball_lock:
        store = group._balls if isinstance(group, LampGroup) else None
        state = store.get(key) if store is not None else group._ball
        if state is None:
            e = group.identity()
            state = {"dist": {e: 0}, "frontier": [e], "radius": 0}
        dist = state["dist"]
        gens = _gens_for(group, kind) if state["radius"] < radius else ()
        while state["radius"] < radius:
            nxt = []
            r = state["radius"] + 1
            for x in state["frontier"]:
                for s in gens:
                    y = x * s
                    if y not in dist:
                        dist[y] = r
                        nxt.append(y)
            state["frontier"] = nxt
            state["radius"] = r
        if store is not None:
            store[key] = state
        else:
            group._ball = state
    if state["radius"] == radius:
        return dist
    return {g: d for g, d in dist.items() if d <= radius}


def word_length(g, R=None, kind="standard"):
    """Exact word length by breadth-first search, refusing beyond radius R."""
    cap = radius_cap(WORD_RADIUS_CAP)
    R = cap if R is None else R
    if R > cap:
        raise RadiusExceeded(f"radius {R} exceeds cap {cap}")
    dist = _cached_ball(g.group, R, kind)
    if g not in dist:
        raise RadiusExceeded(f"word length exceeds {R}")
    return dist[g]


# -- Bass-Serre tree of Gamma_M ----------------------------------------------------


class BassSerreTree:
    """The (d+1)-regular Bass-Serre tree of Gamma_M with exact vertex labels.

    Vertices are cosets g<b_1..b_n>, labelled (k, w) with w the canonical
    fractional part of u.  The parent of (k, w) is (k-1, frac(M w)); tree
    height is -k.  Children are indexed by the d classes of M^-1 Z^n / Z^n,
    enumerated in lexicographic order (class 0 is Z^n and continues the
    anchor ray).
    """

    def __init__(self, group: AbcGroup):
        self.group = group
        self.d = group.d
        n = group.n
        self.sdet = group.split.det_sign * group.d
        # integer adjugate: M^-1 = adj / sdet
        self.adj = tuple(tuple(int(x * self.sdet) for x in row) for row in group.M_power(-1))
        keys = set()
        for z in itertools.product(range(self.d), repeat=n):
            keys.add(self._class_key(matvec(self.adj, z)))
        # class of M^-1 z is keyed by adj z mod |det|; key 0 is the lattice itself
        self.keys = sorted(keys)
        if len(self.keys) != self.d:
            raise AssertionError("coset enumeration failed")
        self.index = {c: i for i, c in enumerate(self.keys)}
        self.classes = [tuple(frac_part(Fraction(x, self.sdet)) for x in k) for k in self.keys]

    @staticmethod
    def _frac(vec):
        return tuple(frac_part(x) for x in vec)

    def _class_key(self, v):
        return tuple(int(x) % self.d for x in v)

    @staticmethod
    def _common(w):
        L = 1
        for x in w:
            L = math.lcm(L, Fraction(x).denominator)
        return tuple(int(Fraction(x) * L) % L for x in w), L

    def to_tree_vertex(self, k, w):
        z, L = self._common(w)
        M = self.group.M
        addr = []
        steps = 0
        while any(z):
            pz = tuple(sum(a * b for a, b in zip(row, z)) % L for row in M)
            # sdet * (w - M^-1 parent), an integer vector after dividing by L
            num = [self.sdet * x - y for x, y in zip(z, matvec(self.adj, pz))]
            addr.append(self.index[self._class_key(x // L for x in num)])
            z = pz
            steps += 1
            if steps > MAX_TREE_DEPTH:
                raise DepthExceeded("vertex lies too far from the anchor ray")
        return TreeVertex(self.d, -k, tuple(addr))

    def from_tree_vertex(self, x: TreeVertex):
        if x.m != self.d:
            raise ValueError("branching does not match det M")
        n = self.group.n
        d = self.d
        z, L = (0,) * n, 1
        for digit in reversed(x.addr):
            # w -> frac(M^-1 w + c), c = adj key / sdet
            key = self.keys[digit]
            z = tuple(a + b * L for a, b in zip(matvec(self.adj, z), key))
            L = L * d
            if self.sdet < 0:
                z = tuple(-v for v in z)
            z = tuple(v % L for v in z)
        w = tuple(frac_part(Fraction(v, L)) for v in z)
        return (-x.h, w)

    def act_label(self, g: AbcElement, k, w):
        Mk = self.group.M_power(-k)
        return (g.k + k, self._frac(a + b for a, b in zip(matvec(Mk, g.u), w)))

    def act_vertex(self, g: AbcElement, x: TreeVertex) -> TreeVertex:
        k, w = self.from_tree_vertex(x)
        return self.to_tree_vertex(*self.act_label(g, k, w))

    def act_end(self, g: AbcElement, y: MAdic, depth=None) -> MAdic:
        """Image of a boundary point of Q_d, exact on the returned window."""
        if g.is_identity():
            return y
        end = y.end
        if end is None:
            end = max(y.val + len(y.digits()), 0) + (depth or 64)
        if end - min(y.val, 0) > MAX_TREE_DEPTH:
            raise DepthExceeded(f"tree depth {end} exceeds {MAX_TREE_DEPTH}")
        x = spaces.vertex_on_end(y, -end)
        image = self.act_vertex(g, x)
        new_end = end + g.k
        return spaces.tree_end(image).truncate(new_end)


# -- actions on X_Mbar --------------------------------------------------------------


def _exact_coords(split, v):
    return split.exact is not None and all(isinstance(x, (int, Fraction)) for x in v)


def act_on_model(g: AbcElement, p: XPoint, split=None) -> XPoint:
    """g = a^k b^u acts as b^u (translation by S^-1 u) followed by a^k."""
    group = g.group
    split = split or group.split
    if _exact_coords(split, p.v):
        ex = split.exact
        shifted = [Fraction(x) + y for x, y in zip(p.v, matvec(ex.Sinv, g.u))]
        v = tuple(x * (Fraction(mb) * s) ** g.k for x, mb, s in zip(shifted, ex.mbar, ex.signs))
    else:
        shift = split.Sinv @ np.array([float(x) for x in g.u])
        vec = np.array([float(x) for x in p.v]) + shift
        MP = split.Mbar @ split.P
        v = tuple((np.linalg.matrix_power(MP, g.k) @ vec).tolist())
    y = p.y
    if y is not None:
        y = group.tree.act_end(g, y)
    return XPoint(v, p.t + g.k, y)


def act_lattice(g: AbcElement, w):
    """Action in lattice coordinates w = S v: w -> M^k (w + u), exact."""
    Mk = g.group.M_power(g.k)
    return matvec(Mk, [Fraction(x) + y for x, y in zip(w, g.u)])


def _vdev(p, q):
    return max((abs(float(a) - float(b)) for a, b in zip(p.v, q.v)), default=0.0)


def _ydev(p, q):
    if p.y is None:
        return 0.0
    try:
        v = p.y.diff_valuation(q.y)
    except Exception:
        return 0.0
    return 0.0 if v is None else float(Fraction(p.y.m) ** -v)


def sample_points(group: AbcGroup, count, seed=0, exact=False):
    """Deterministic sample points (v, t, y) for relation and action checks."""
    rng = random.Random(seed)
    split = group.split
    pts = []
    for _ in range(count):
        if exact:
            v = tuple(Fraction(rng.randint(-1000, 1000), rng.randint(1, 64)) for _ in range(group.n))
        else:
            v = tuple(rng.uniform(-10, 10) for _ in range(group.n))
        t = rng.randint(-5, 5)
        y = None
        if split.det > 1:
            digits = [rng.randrange(split.det) for _ in range(rng.randint(1, 12))]
            y = MAdic.from_digits(split.det, digits, val=rng.randint(-4, 4), exact=True)
        pts.append(XPoint(v, t, y))
    return pts


def verify_relations(group, sample, tol=1e-9, raise_on_violation=True):
    """Check a b_j a^-1 = phi_M(b_j) and b_i b_j = b_j b_i as maps on X_Mbar.

    The left side is applied generator by generator.  Returns the maximum
    deviation per relation for float v-coordinates, exact lattice
    coordinates and tree coordinates.
    """
    if not isinstance(group, AbcGroup):
        group = AbcGroup(group)
    if not sample:
        raise ValueError("need at least one sample point")
    a, ainv = group.a(), group.a().inverse()
    report = []

    def run(word, p):
        for g in reversed(word):
            p = act_on_model(g, p)
        return p

    relations = []
    for j in range(1, group.n + 1):
        relations.append((f"a b{j} a^-1 = phi(b{j})", [a, group.b(j), ainv], [group.phi(j)]))
    for i in range(1, group.n + 1):
        for j in range(i + 1, group.n + 1):
            relations.append((f"b{i} b{j} = b{j} b{i}", [group.b(i), group.b(j)], [group.b(j), group.b(i)]))
    for name, lhs, rhs in relations:
        vdev = ydev = wdev = 0.0
        exact_v = True
        for p in sample:
            left, right = run(lhs, p), run(rhs, p)
            dv = _vdev(left, right)
            if not _exact_coords(group.split, p.v):
                exact_v = False
            vdev = max(vdev, dv)
            ydev = max(ydev, _ydev(left, right))
            # lattice coordinates w = S v on a nearby rational point
            w = tuple(Fraction(x) if isinstance(x, (int, Fraction)) else Fraction(round(x * 64), 64) for x in p.v)
            wl, wr = w, w
            for g in reversed(lhs):
                wl = act_lattice(g, wl)
            for g in reversed(rhs):
                wr = act_lattice(g, wr)
            wdev = max(wdev, max(float(abs(x - y)) for x, y in zip(wl, wr)))
            limit = 0.0 if exact_v else tol
            if raise_on_violation and (dv > limit or _ydev(left, right) > 0 or wdev > 0):
                raise RelationViolated(f"relation {name} fails", witness=p)
        report.append(
            {"relation": name, "max_dev_v": vdev, "exact_v": exact_v, "max_dev_lattice": wdev, "max_dev_tree": ydev}
        )
    return report


# -- boundary actions ------------------------------------------------------------------


def boundary_action(g: AbcElement, side, split=None):
    """The similarity gamma_{g,side} induced on the parabolic boundary."""
    from .qimaps import BoundarySimilarity

    group = g.group
    split = split or group.split
    shift = split.Sinv @ np.array([float(x) for x in g.u])
    sl = split.block_slice(side)
    P = split.P[sl, sl]
    A = orthogonal_power(P, g.k)
    lam = split.block_diag(side)
    c = g.k if side == 1 else -g.k
    dil = lam ** c
    tau = dil * (A @ shift[sl])
    madic = None
    if side == 2 and split.det > 1:
        tree = group.tree
        madic = (lambda y, _g=g: tree.act_end(_g, y), -g.k)
    return BoundarySimilarity(
        c=c,
        lam=lam,
        A=A,
        tau=tau,
        classes=split.classes(side),
        alphas=split.block_alphas(side),
        madic=madic,
        base_m=split.det,
    )


def dense_translation_sampler(group, side, target, eps, T_max=10, budget=10000):
    """Element of the subgroup generated by conjugates a^t b_j a^-t inducing a
    boundary translation within eps of target (greedy residual reduction)."""
    if not isinstance(group, AbcGroup):
        group = AbcGroup(group)
    split = group.split
    if eps <= 0:
        raise ValueError("eps must be positive")
    if side == 2 and split.det > 1:
        raise ValueError("side 2 carries a Q_d factor; only d = 1 is supported here")
    sl = split.block_slice(side)
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if target.shape[0] != sl.stop - sl.start:
        raise ValueError("target dimension does not match the boundary")
    u = [Fraction(0)] * group.n
    residual = target.copy()
    # candidate translations S^-1 M^t e_j, largest first
    cands = []
    for t in range(T_max, -T_max - 1, -1):
        Mt = group.M_power(t)
        for j in range(group.n):
            col = [Mt[i][j] for i in range(group.n)]
            vec = (split.Sinv @ np.array([float(x) for x in col]))[sl]
            if np.linalg.norm(vec) > 0:
                cands.append((t, j, col, vec))
    steps = 0
    while np.linalg.norm(residual) > eps:
        best = None
        for t, j, col, vec in cands:
            c = round(float(residual @ vec) / float(vec @ vec))
            if c == 0:
                continue
            r = np.linalg.norm(residual - c * vec)
            if best is None or r < best[0] - 1e-15:
                best = (r, c, col, vec)
        if best is None or best[0] >= np.linalg.norm(residual):
            raise SearchBudgetExceeded("no conjugate translation reduces the residual")
        r, c, col, vec = best
        residual = residual - c * vec
        u = [x + c * y for x, y in zip(u, col)]
        steps += 1
        if steps > budget:
            raise SearchBudgetExceeded(f"no solution within {budget} steps")
    return group.element(0, u)


def induced_translation(g: AbcElement, side=1):
    split = g.group.split
    return (split.Sinv @ np.array([float(x) for x in g.u]))[split.block_slice(side)]


def conjugate_depth(g: AbcElement):
    """Smallest T with u in M^-T Z^n (the conjugation depth of a b-word)."""
    group = g.group
    for T in range(0, MAX_TREE_DEPTH):
        w = matvec(group.M_power(T), g.u)
        if all(x.denominator == 1 for x in w):
            return T
    raise DepthExceeded("conjugation depth too large")


# -- parsing helpers ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def parse_group(text):
    """'bs:1,n' -> BS(1,n); 'abc:[[..]]' -> Gamma_M; 'll:q' -> Z/q wr Z."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    if kind == "bs":
        one, n = (int(x) for x in arg.split(","))
        if one != 1:
            raise ValueError("only BS(1, n) is supported")
        return AbcGroup([[n]], name=f"bs:1,{n}")
    if kind in ("abc", "gamma"):
        return AbcGroup(json.loads(arg), name=f"abc:{arg}")
    if kind in ("ll", "lamp"):
        return LampGroup(int(arg))
    raise ValueError(f"unknown group {text!r}")


def element_to_json(g):
    if isinstance(g, AbcElement):
        return {"k": g.k, "u": [str(x) for x in g.u]}
    return {"pos": g.pos, "lamps": {str(p): v for p, v in g.lamps}}


def log_growth(group, radius):
    """Sphere sizes of the word-metric ball (diagnostic)."""
    dist = group.ball(radius)
    sizes = [0] * (radius + 1)
    for d in dist.values():
        sizes[d] += 1
    return sizes, [math.log(s) if s else float("-inf") for s in sizes]


__all__ = [
    "AbcGroup",
    "AbcElement",
    "LampGroup",
    "LampElement",
    "BassSerreTree",
    "multiply",
    "word_length",
    "act_on_model",
    "act_lattice",
    "verify_relations",
    "boundary_action",
    "dense_translation_sampler",
    "lamp_to_dl",
    "dl_to_lamp",
    "parse_group",
    "parse_word",
    "sample_points",
]
