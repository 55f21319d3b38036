"""Finite-extension envelopes H = Gamma x| F and the quasi-isometries q_h.

For h = (g0, phi) the section p(g, phi) = g gives q_h(g) = g0 * phi(g).
The word metric is left-invariant, so pairwise image distances of q_h only
depend on the automorphism part; they are computed once per element of F.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .groups import LampGroup, parse_group, word_length
from .qimaps import SampledMap, estimate_qi_constants


@dataclass(eq=False)
class Envelope:
    """Gamma x| Z/r with Z/r acting through powers of one automorphism."""

    group: object
    order: int = 1
    auto: Callable = None
    name: str = "trivial"
    kind: str = "standard"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("F must be nonempty")
        if self.auto is None:
            self.auto = lambda g: g

    def phi(self, j, g):
        for _ in range(j % self.order):
            g = self.auto(g)
        return g

    def element(self, g, j=0):
        return (g, j % self.order)

    def multiply(self, h1, h2):
        (g1, j1), (g2, j2) = h1, h2
        return (g1 * self.phi(j1, g2), (j1 + j2) % self.order)

    def section(self, h):
        return h[0]

    def dist(self, x, y):
        return word_length(x.inverse() * y, kind=self.kind)

    def ball(self, R):
        if isinstance(self.group, LampGroup):
            return list(self.group.ball(R, self.kind))
        return list(self.group.ball(R))

    def label(self, h):
        g, j = h
        return f"{g}|phi^{j}"


def make_envelope(group, ext="trivial", order=None):
    """'trivial' (direct product with Z/order), 'flip' (lamp flip, Z/2), 'none'."""
    if isinstance(group, str):
        group = parse_group(group)
    kind = "dl" if isinstance(group, LampGroup) else "standard"
    if ext in ("none", "identity"):
        return Envelope(group, 1, None, "identity", kind)
    if ext == "trivial":
        return Envelope(group, order or 2, None, "trivial", kind)
    if ext == "flip":
        if not isinstance(group, LampGroup):
            raise ValueError("the flip extension needs a lamplighter group")
        return Envelope(group, 2, group.flip, "flip", kind)
    raise ValueError(f"unknown extension {ext!r}")


def q_point(h, g, env: Envelope):
    """q_h(g) = p(h * (g, id))."""
    return env.section(env.multiply(h, env.element(g)))


def _matrix(points, env, j):
    key = (len(points), j)
    if key not in env._cache:
        imgs = [env.phi(j, x) for x in points]
        n = len(points)
        out = np.zeros((n, n))
        for i in range(n):
            inv = imgs[i].inverse()
            for k in range(i + 1, n):
                out[i, k] = out[k, i] = word_length(inv * imgs[k], kind=env.kind)
        env._cache[key] = out
    return env._cache[key]


def q_map(h, env: Envelope, R) -> SampledMap:
    """The table g -> p(h g) on the radius-R ball."""
    dom = env.ball(R)
    img = [q_point(h, g, env) for g in dom]
    center = q_point(h, env.group.identity(), env)
    codomain = [center * z for z in dom]
    return SampledMap(dom, img, env.dist, env.dist, codomain_ball=codomain, tag="q_h",
                      domain_matrix=_matrix(dom, env, 0), image_matrix=_matrix(dom, env, h[1]))


def sampled_h(env: Envelope, radius=2):
    return [env.element(g, j) for g in env.ball(radius) for j in range(env.order)]


@dataclass
class FurmanReport:
    R: int
    K: float
    C: float
    B: int
    restriction_exact: bool
    composition_defect: int
    rows: list
    stability: dict

    @property
    def uniform(self):
        return all(r["K"] <= self.K and r["C"] <= self.C for r in self.rows)

    @property
    def cocycle_ok(self):
        return self.composition_defect <= 2 * self.B


def verify_lemma_5_1(env: Envelope, R=6, h_radius=2, pair_radius=1, stability=True) -> FurmanReport:
    if R < 4:
        raise ValueError("R must be at least 4")
    dom = env.ball(R)
    hs = sampled_h(env, h_radius)
    rows = []
    K = C = 0.0
    for h in hs:
        k, c = estimate_qi_constants(q_map(h, env, R))
        g0, j = h
        # displacement from the translation part g -> g0 g
        b = max(env.dist(g0 * env.phi(j, g), g0 * g) for g in dom)
        rows.append({"h": env.label(h), "K": k, "C": c, "B": b, "composition_defect": 0})
        K, C = max(K, k), max(C, c)

    restriction = all(q_point(env.element(g), x, env) == g * x for g in dom for x in dom)
    B = max(env.dist(env.phi(j, g), g) for j in range(env.order) for g in dom)

    pairs = sampled_h(env, pair_radius)
    index = {env.label(h): i for i, h in enumerate(hs)}
    defect = 0
    for h1 in pairs:
        for h2 in pairs:
            h12 = env.multiply(h1, h2)
            d = max(env.dist(q_point(h12, x, env), q_point(h1, q_point(h2, x, env), env)) for x in dom)
            row = rows[index[env.label(h1)]]
            row["composition_defect"] = max(row["composition_defect"], d)
            defect = max(defect, d)

    stab = {}
    if stability:
        K5 = C5 = 0.0
        for h in hs:
            k, c = estimate_qi_constants(q_map(h, env, R - 1))
            K5, C5 = max(K5, k), max(C5, c)
        stab = {"R_minus_1": (K5, C5), "R": (K, C), "stable": K <= K5 + 1 and C <= C5 + 1}
    return FurmanReport(R, K, C, B, restriction, defect, rows, stab)


CSV_COLUMNS = ("h", "K", "C", "B", "composition_defect")

__all__ = ["Envelope", "make_envelope", "q_map", "q_point", "verify_lemma_5_1", "FurmanReport", "CSV_COLUMNS"]
