"""Quasi-isometries, similarities and almost translations.

Maps come in two flavours: structured (closed-form similarities and almost
translations, exact by formula) and sampled (a finite table on a ball plus
the two metrics).  Composing a structured map with a sampled one gives a
sampled map.
"""
from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy.linalg import block_diag

from . import spaces
from .boundary import BlockVector, ProductBoundaryPoint, dM_metric, madic_dist
from .errors import (
    DegenerateSamples,
    DomainMismatch,
    HeightMismatch,
    NotHeightRespecting,
)
from .madic import MAdic
from .spaces import GPoint, TreeVertex
from .spectral import orthogonal_power

ROUND = 9


# -- sampled maps ---------------------------------------------------------------


@dataclass(eq=False)
class SampledMap:
    """A map known on finitely many points.

    ``domain_matrix`` / ``image_matrix`` may carry precomputed pairwise
    distances (same ordering as ``domain``); otherwise the metrics are called.
    """

    domain: list
    image: list
    d_domain: Callable
    d_codomain: Callable
    codomain_ball: Optional[list] = None
    tag: str = "qi"
    domain_matrix: Optional[np.ndarray] = None
    image_matrix: Optional[np.ndarray] = None
    _index: dict = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.domain:
            raise ValueError("sample table is empty")
        if len(self.domain) != len(self.image):
            raise ValueError("domain and image tables differ in length")
        try:
            self._index = {x: i for i, x in enumerate(self.domain)}
            distinct = len(self._index) == len(self.domain)
        except TypeError:
            self._index = None
            distinct = True
        if not distinct:
            raise ValueError("domain points must be pairwise distinct")

    @classmethod
    def from_function(cls, domain, f, d_domain, d_codomain=None, **kw):
        domain = list(domain)
        return cls(domain, [f(x) for x in domain], d_domain, d_codomain or d_domain, **kw)

    def __call__(self, x):
        if self._index is None or x not in self._index:
            raise DomainMismatch("point outside the sample table")
        return self.image[self._index[x]]

    def __len__(self):
        return len(self.domain)

    def compose(self, inner: "SampledMap") -> "SampledMap":
        """self o inner, on inner's domain."""
        return SampledMap(inner.domain, [self(y) for y in inner.image], inner.d_domain, self.d_codomain,
                          self.codomain_ball, tag="qi", domain_matrix=inner.domain_matrix)

    def pair_distances(self):
        """Arrays (d, d') over all unordered pairs i < j."""
        n = len(self.domain)
        iu = np.triu_indices(n, 1)
        if self.domain_matrix is not None:
            dd = np.asarray(self.domain_matrix, dtype=float)[iu]
        else:
            dd = np.array([float(self.d_domain(self.domain[i], self.domain[j])) for i, j in zip(*iu)])
        if self.image_matrix is not None:
            di = np.asarray(self.image_matrix, dtype=float)[iu]
        else:
            di = np.array([float(self.d_codomain(self.image[i], self.image[j])) for i, j in zip(*iu)])
        return dd, di


def _envelope_slope(x, y, upper):
    """Least-squares slope of the upper (or lower) envelope of y against x."""
    keys = np.round(x, ROUND)
    order = np.lexsort((y, keys))
    keys, y = keys[order], y[order]
    xs, first = np.unique(keys, return_index=True)
    if upper:
        ys = np.maximum.reduceat(y, first)
    else:
        ys = np.minimum.reduceat(y, first)
    if len(xs) == 1:
        return ys[0] / xs[0] if xs[0] > 0 else 1.0
    # K is a large-scale constant: fit on the upper half of the distance range
    keep = xs >= np.median(xs)
    if keep.sum() >= 2:
        xs, ys = xs[keep], ys[keep]
    return float(np.polyfit(xs, ys, 1)[0])


def estimate_qi_constants(f: SampledMap):
    """Canonical (K, C) with -C + d/K <= d' <= K d + C on every sample pair.

    K is read off the slopes of the upper and lower distortion envelopes
    over the larger half of the sampled distances, then C is the least additive constant for that K; coarse surjectivity
    against ``codomain_ball`` is folded into C.
    """
    if len(f) < 2:
        raise ValueError("need at least two samples")
    dd, di = f.pair_distances()
    up = _envelope_slope(dd, di, upper=True)
    lo = _envelope_slope(dd, di, upper=False)
    if lo > 0:
        K = max(1.0, up, 1.0 / lo)
    else:
        pos = di > 0
        K = max(1.0, up, float(np.max(dd[pos] / di[pos])) if np.any(pos) else 1.0)
    K = round(K, ROUND)
    C = float(np.max(np.maximum(di - K * dd, dd / K - di), initial=0.0))
    if f.codomain_ball is not None:
        C = max(C, surjectivity_gap(f))
    return K, round(max(C, 0.0), ROUND)


def surjectivity_gap(f: SampledMap) -> float:
    """max over the codomain ball of the distance to the image."""
    gap = 0.0
    try:
        hit = set(f.image)
    except TypeError:
        hit = set()
    for y in f.codomain_ball:
        if y in hit:
            continue
        gap = max(gap, min(float(f.d_codomain(y, z)) for z in f.image))
    return gap


def quasi_similarity_constants(f: SampledMap):
    """(K, s): s the geometric mean of the extreme ratios d'/d, K the spread."""
    dd, di = f.pair_distances()
    if dd.size == 0:
        raise ValueError("need at least two samples")
    if np.any(dd == 0):
        raise DegenerateSamples("a sample pair has zero domain distance")
    r = di / dd
    rmax, rmin = float(r.max()), float(r.min())
    if rmin <= 0:
        raise DegenerateSamples("a sample pair collapses to a point")
    return math.sqrt(rmax / rmin), math.sqrt(rmax * rmin)


# -- boundary similarities ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundarySimilarity:
    """x -> lam**c * A x + tau on the real part; an m-adic similarity on Q_m.

    ``madic`` is ``(callable, exponent)``: distances in Q_m scale by
    ``base_m ** exponent``.
    """

    c: float
    lam: np.ndarray
    A: np.ndarray
    tau: np.ndarray
    classes: tuple
    alphas: tuple
    madic: Optional[tuple] = None
    base_m: int = 1

    def __post_init__(self):
        n = len(self.lam)
        if self.A.shape != (n, n):
            raise ValueError("orthogonal part has the wrong shape")
        if n and np.max(np.abs(self.A.T @ self.A - np.eye(n))) > 1e-9:
            raise ValueError("linear part is not orthogonal")
        where = {i: b for b, cl in enumerate(self.classes) for i in cl}
        for i, j in zip(*np.nonzero(np.abs(self.A) > 1e-9)):
            if where[i] != where[j]:
                raise ValueError("orthogonal part mixes eigen-blocks")

    @classmethod
    def identity(cls, split, side=1):
        lam = split.block_diag(side)
        n = len(lam)
        madic = None
        if side == 2 and split.det > 1:
            madic = (lambda y: y, 0)
        return cls(0, lam, np.eye(n), np.zeros(n), split.classes(side), split.block_alphas(side), madic, split.det)

    @property
    def real_dim(self):
        return len(self.lam)

    @property
    def scale(self):
        """Similarity constant of the real part (or of Q_m when that is all)."""
        if self.real_dim:
            return math.exp(self.alphas[0] * self.c)
        return float(self.base_m) ** self.madic[1]

    @property
    def madic_scale(self):
        return None if self.madic is None else Fraction(self.base_m) ** self.madic[1]

    def _real(self, x):
        return self.lam ** self.c * (self.A @ np.asarray(x, dtype=float)) + self.tau

    def __call__(self, x):
        if isinstance(x, ProductBoundaryPoint):
            return ProductBoundaryPoint(self._real(x.x), self.madic[0](x.y))
        if isinstance(x, MAdic):
            return self.madic[0](x)
        return self._real(x)

    def compose(self, other: "BoundarySimilarity") -> "BoundarySimilarity":
        """self o other."""
        dil = self.lam ** self.c
        madic = None
        if self.madic is not None and other.madic is not None:
            f, g = self.madic[0], other.madic[0]
            madic = (lambda y: f(g(y)), self.madic[1] + other.madic[1])
        return BoundarySimilarity(
            self.c + other.c,
            self.lam,
            self.A @ other.A,
            dil * (self.A @ other.tau) + self.tau,
            self.classes,
            self.alphas,
            madic,
            self.base_m,
        )

    def metric(self, p, q):
        if isinstance(p, ProductBoundaryPoint):
            real = dM_metric(BlockVector.from_classes(p.x, self.classes, self.alphas),
                             BlockVector.from_classes(q.x, self.classes, self.alphas))
            return max(real, float(madic_dist(p.y, q.y)))
        if isinstance(p, MAdic):
            return float(madic_dist(p, q))
        return dM_metric(BlockVector.from_classes(p, self.classes, self.alphas),
                         BlockVector.from_classes(q, self.classes, self.alphas))

    def sample_points(self, count=40, seed=0):
        rng = random.Random(seed)
        pts = []
        for _ in range(count):
            x = np.array([rng.uniform(-10, 10) for _ in range(self.real_dim)])
            if self.madic is None:
                pts.append(x)
                continue
            digits = [rng.randrange(self.base_m) for _ in range(rng.randint(1, 12))]
            digits[-1] = digits[-1] or 1
            y = MAdic.from_digits(self.base_m, digits, val=rng.randint(-4, 4))
            pts.append(ProductBoundaryPoint(x, y) if self.real_dim else y)
        return _dedupe(pts, self.metric)

    def sampled(self, points=None, count=40, seed=0) -> SampledMap:
        pts = self.sample_points(count, seed) if points is None else list(points)
        return _unhashable_map(pts, [self(p) for p in pts], self.metric, tag="similarity")


def _dedupe(points, metric):
    out = []
    for p in points:
        if all(metric(p, q) > 0 for q in out):
            out.append(p)
    return out


def _unhashable_map(domain, image, metric, tag):
    n = len(domain)
    dm = np.zeros((n, n))
    im = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dm[i, j] = dm[j, i] = metric(domain[i], domain[j])
            im[i, j] = im[j, i] = metric(image[i], image[j])
    return SampledMap(list(range(n)), list(range(n)), metric, metric, tag=tag, domain_matrix=dm, image_matrix=im)


# -- almost translations ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AlmostTranslation:
    """(x_1, ..., x_r[, y]) -> (x_1 + B_1(x_2..), ..., x_r + B_r(y)[, y]).

    ``offsets[i]`` receives the tuple of deeper coordinates; ``holder`` holds
    one (K, alpha) pair per level.
    """

    offsets: tuple
    holder: tuple

    def __call__(self, levels, tail=None):
        levels = list(levels)
        r = len(levels)
        if r != len(self.offsets):
            raise ValueError("level count mismatch")
        out = []
        for i in range(r):
            deeper = tuple(levels[i + 1:]) + ((tail,) if tail is not None else ())
            out.append(levels[i] + self.offsets[i](deeper))
        return (tuple(out), tail) if tail is not None else tuple(out)

    def holder_violations(self, level, samples, dist):
        """Sample pairs of deeper coordinates breaking |dB| <= K dist^alpha."""
        K, alpha = self.holder[level]
        B = self.offsets[level]
        bad = []
        for i, x in enumerate(samples):
            for xp in samples[i + 1:]:
                lhs = float(np.linalg.norm(np.asarray(B(x)) - np.asarray(B(xp))))
                if lhs > K * dist(x, xp) ** alpha + 1e-12:
                    bad.append((x, xp))
        return bad


# -- induced boundary maps ----------------------------------------------------------------


@dataclass(eq=False)
class InducedBoundaryMap:
    """Boundary map of a height-respecting map given pointwise on a factor."""

    F: Callable
    factor: str
    a: float
    c: float
    R: float
    depth: int = 24
    frozen_height: float = 0.0

    def __call__(self, xi):
        if self.factor == "tree":
            top = xi.end if xi.end is not None else max(xi.val + len(xi.digits()), 0)
            x = spaces.vertex_on_end(xi, -(top + self.depth) if xi.end is None else -xi.end)
            y = self.F(x)
            return spaces.tree_end(y).truncate(-y.h)
        v = np.atleast_1d(np.asarray(xi, dtype=float))
        return np.array(self.F(GPoint(self.frozen_height, tuple(v))).vec())

    def metric(self, p, q):
        if self.factor == "tree":
            return float(madic_dist(p, q))
        return float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)))

    def sampled(self, points) -> SampledMap:
        pts = list(points)
        return _unhashable_map(pts, [self(p) for p in pts], self.metric, tag="induced")

    def scale_window(self):
        """Interval the measured scale must fall in: a^c within a factor a^(2R)."""
        return self.a ** (self.c - 2 * self.R), self.a ** (self.c + 2 * self.R)


def induced_boundary_map(F, factor=None, a=None, c=None, R=0.0, samples=None, side=1):
    """Boundary map induced by a height-respecting map.

    ``F`` is a group element (structured, via its boundary action), a
    BoundarySimilarity (returned as is) or a callable on factor points
    (TreeVertex / GPoint) whose height displacement is checked on ``samples``.
    """
    from .groups import AbcElement, boundary_action

    if isinstance(F, AbcElement):
        return boundary_action(F, side)
    if isinstance(F, BoundarySimilarity):
        return F
    if factor not in ("tree", "G"):
        raise ValueError("factor must be 'tree' or 'G'")
    if a is None or a <= 1:
        raise ValueError("base a must exceed 1")
    disp = []
    for x in samples or []:
        disp.append(float(F(x).height) - float(x.height))
    if c is None:
        if not disp:
            raise ValueError("need samples or a declared height translation")
        c = disp[0]
    if disp and max(abs(d - c) for d in disp) > R + 1e-12:
        raise NotHeightRespecting(f"height displacement varies beyond R={R} around c={c}")
    return InducedBoundaryMap(F, factor, float(a), float(c), float(R))


# -- uniformity detector --------------------------------------------------------------


@dataclass(frozen=True)
class IterateResult:
    kind: str
    s: Optional[int] = None

    def __str__(self):
        return self.kind if self.s is None else f"{self.kind}({self.s})"


COMPATIBLE = IterateResult("Compatible")


def _exact(x):
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def uniform_iterate_check(pair, R, max_iter=10**6) -> IterateResult:
    """Smallest s >= 1 with |s (c1 + c2)| > 2R, computed exactly."""
    if R <= 0:
        raise ValueError("R must be positive")
    c = _exact(pair[0]) + _exact(pair[1])
    if c == 0:
        return COMPATIBLE
    s = math.floor(2 * _exact(R) / abs(c)) + 1
    if s > max_iter:
        return COMPATIBLE
    return IterateResult("ViolatedAt", s)


# -- psi -------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StructuredPair:
    """Boundary maps on both sides reduced to orthogonal parts and heights."""

    A1: np.ndarray
    A2: np.ndarray
    t1: float
    t2: float

    @classmethod
    def from_similarities(cls, g1: BoundarySimilarity, g2: BoundarySimilarity):
        return cls(g1.A, g2.A, g1.c, g2.c)

    @classmethod
    def from_element(cls, g):
        from .groups import boundary_action

        return cls.from_similarities(boundary_action(g, 1), boundary_action(g, 2))

    def compose(self, other):
        return StructuredPair(self.A1 @ other.A1, self.A2 @ other.A2, self.t1 + other.t1, self.t2 + other.t2)


def psi(gamma: StructuredPair, P):
    """(blockdiag(A1, A2) P^-t, exp(2 pi i t))."""
    if abs(float(gamma.t1) + float(gamma.t2)) > 1e-9:
        raise HeightMismatch(f"heights {gamma.t1} and {gamma.t2} do not cancel")
    t = gamma.t1
    A = block_diag(gamma.A1, gamma.A2) if gamma.A1.size and gamma.A2.size else (
        gamma.A1 if gamma.A1.size else gamma.A2)
    return A @ orthogonal_power(np.asarray(P, dtype=float), -Fraction(t).limit_denominator(10**9)), \
        cmath.exp(2j * math.pi * float(t))


# -- straightening -------------------------------------------------------------------------


@dataclass(frozen=True)
class StraighteningResult:
    bound: float
    empirical: float

    @property
    def ok(self):
        return self.empirical <= self.bound


def straightening_bound(B, K, alpha, xr, eps, n) -> StraighteningResult:
    """Compare |B(x_r) - B(0)| with 2 K eps^alpha + (K/n) |x_r|^alpha."""
    if n < 1 or eps <= 0:
        raise ValueError("need n >= 1 and eps > 0")
    bound = 2 * K * eps ** alpha + (K / n) * abs(xr) ** alpha
    return StraighteningResult(bound, abs(float(B(xr)) - float(B(0.0))))


# -- coarse comparisons --------------------------------------------------------------------


def coarse_distance_maps(f: SampledMap, g: SampledMap, ball=None) -> float:
    """max over the common domain (or ``ball``) of d(f(x), g(x))."""
    if len(f.domain) != len(g.domain) or f._index is None or g._index is None or set(f.domain) != set(g.domain):
        raise DomainMismatch("maps are sampled on different domains")
    pts = f.domain if ball is None else list(ball)
    best = 0.0
    for x in pts:
        best = max(best, float(f.d_codomain(f(x), g(x))))
    return best


def _identity_like(f):
    return SampledMap(f.domain, list(f.domain), f.d_domain, f.d_codomain, tag="identity")


def qi_tameness_probe(family, K=None, C=None, radius_of=None, slack=0.0) -> float:
    """Largest displacement from the identity over a family of maps.

    With ``radius_of`` (distance to the basepoint) each member must have the
    same maximal displacement on the inner half-ball as on the whole ball;
    growing displacement means the map is not at finite distance from the
    identity, and the member is rejected.
    """
    best = 0.0
    for f in family:
        disp = {x: float(f.d_codomain(f(x), x)) for x in f.domain}
        if radius_of is not None:
            rmax = max(radius_of(x) for x in f.domain)
            inner = max(d for x, d in disp.items() if radius_of(x) <= rmax // 2)
            if max(disp.values()) > inner + slack:
                raise ValueError("family member is not at bounded distance from the identity")
        if K is not None:
            k, c = estimate_qi_constants(f)
            if k > K + 1e-9 or c > C + 1e-9:
                raise ValueError(f"family member has constants ({k}, {c}) beyond ({K}, {C})")
        best = max(best, max(disp.values()))
    return best


# -- radial points ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialCertificate:
    """Finite witness that g_n(x) stays within R of the ray."""

    R: float
    witnesses: tuple


def radial_certificate(maps, x, ray, dist) -> RadialCertificate:
    """R = max over the maps of the distance from g_n(x) to the sampled ray."""
    ray = list(ray)
    dists = []
    for g in maps:
        gx = g(x)
        dists.append(min(float(dist(gx, p)) for p in ray))
    return RadialCertificate(max(dists, default=0.0), tuple(dists))


__all__ = [
    "SampledMap",
    "BoundarySimilarity",
    "AlmostTranslation",
    "InducedBoundaryMap",
    "StructuredPair",
    "IterateResult",
    "estimate_qi_constants",
    "quasi_similarity_constants",
    "induced_boundary_map",
    "uniform_iterate_check",
    "psi",
    "straightening_bound",
    "coarse_distance_maps",
    "qi_tameness_probe",
    "radial_certificate",
]
