import math
import random
from fractions import Fraction

import numpy as np
import pytest

from solvlab import boundary, groups, qimaps, spaces
from solvlab.errors import DegenerateSamples, DomainMismatch, HeightMismatch, NotHeightRespecting
from solvlab.groups import AbcGroup, LampGroup, parse_group
from solvlab.madic import MAdic
from solvlab.qimaps import AlmostTranslation, SampledMap, StructuredPair
from solvlab.spaces import GPoint, TreeVertex, tree_distance
from solvlab.spectral import analyze, orthogonal_power

ORIGIN = TreeVertex(2, 0)


def tree_ball6():
    return spaces.tree_ball(ORIGIN, 6)


def random_word(G, rng, length):
    gens = list(G.generators().values())
    g = G.identity()
    for _ in range(rng.randint(0, length)):
        g = g * rng.choice(gens)
    return g


# -- constants of sampled maps ---------------------------------------------------------


def test_identity_constants():
    ball = tree_ball6()
    f = SampledMap.from_function(ball, lambda x: x, tree_distance, codomain_ball=ball)
    assert qimaps.estimate_qi_constants(f) == (1, 0)


def test_doubling_on_integers():
    pts = list(range(-8, 9))
    f = SampledMap.from_function(pts, lambda x: 2 * x, lambda x, y: abs(x - y))
    assert qimaps.estimate_qi_constants(f) == (2, 0)


def test_tree_parent_map():
    f = SampledMap.from_function(tree_ball6(), lambda x: x.parent(), tree_distance)
    K, C = qimaps.estimate_qi_constants(f)
    assert K == 1 and C <= 2
    dd, di = f.pair_distances()
    assert np.all(di <= K * dd + C) and np.all(di >= dd / K - C)


def test_constants_bound_every_pair():
    rng = random.Random(0)
    pts = sorted({round(rng.uniform(-20, 20), 3) for _ in range(120)})
    f = SampledMap.from_function(pts, lambda x: 3 * x + 4 * math.sin(x), lambda x, y: abs(x - y))
    K, C = qimaps.estimate_qi_constants(f)
    dd, di = f.pair_distances()
    assert np.all(di <= K * dd + C + 1e-9) and np.all(di >= dd / K - C - 1e-9)


def test_quasi_similarity_examples():
    pts = [Fraction(i, 8) for i in range(-32, 33)]
    d = lambda x, y: abs(float(x) - float(y))  # noqa: E731
    assert qimaps.quasi_similarity_constants(SampledMap.from_function(pts, lambda x: 3 * x, d)) == pytest.approx((1, 3))
    K, s = qimaps.quasi_similarity_constants(
        SampledMap.from_function(pts, lambda x: 2 * float(x) + math.sin(float(x)) / 10, d))
    assert K <= 1.1 and s == pytest.approx(2, abs=0.1)
    rng = random.Random(1)
    for m in (2, 3, 5):
        ys = {MAdic.from_digits(m, [rng.randrange(m) for _ in range(8)] + [1], val=rng.randint(-3, 3))
              for _ in range(40)}
        f = SampledMap.from_function(list(ys), lambda y: y.scale(1), lambda p, q: float(boundary.madic_dist(p, q)))
        K, s = qimaps.quasi_similarity_constants(f)
        assert K == pytest.approx(1) and s == pytest.approx(1 / m)


def test_degenerate_samples():
    f = SampledMap([0, 1], [0, 0], lambda x, y: abs(x - y), lambda x, y: abs(x - y))
    with pytest.raises(DegenerateSamples):
        qimaps.quasi_similarity_constants(f)
    g = SampledMap([0, 1], [0, 1], lambda x, y: 0.0, lambda x, y: abs(x - y))
    with pytest.raises(DegenerateSamples):
        qimaps.quasi_similarity_constants(g)


def test_sampled_map_domain():
    f = SampledMap.from_function([1, 2, 3], lambda x: x, lambda x, y: abs(x - y))
    with pytest.raises(DomainMismatch):
        f(7)
    with pytest.raises(ValueError):
        SampledMap([1, 1], [1, 2], None, None)


# -- boundary similarities --------------------------------------------------------------


@pytest.mark.parametrize("M", [[[2, 1], [1, 1]], [[1, -1], [1, 1]], [[2, 0], [0, 3]], [[2]]])
def test_similarity_composition(M):
    G = AbcGroup(M)
    rng = random.Random(3)
    for _ in range(1000 // 4):
        g, h = random_word(G, rng, 4), random_word(G, rng, 4)
        for side in (1, 2):
            sg, sh = groups.boundary_action(g, side), groups.boundary_action(h, side)
            comp = sg.compose(sh)
            assert comp.c == sg.c + sh.c
            assert np.allclose(comp.A, sg.A @ sh.A, atol=1e-9)
            direct = groups.boundary_action(g * h, side)
            if direct.real_dim:
                x = np.array([rng.uniform(-3, 3) for _ in range(direct.real_dim)])
                assert np.allclose(direct(x), comp(x), atol=1e-9)


@pytest.mark.parametrize("name", ["bs:1,2", "bs:1,3", "abc:[[2,1],[1,1]]", "abc:[[1,-1],[1,1]]", "abc:[[2,0],[0,3]]"])
def test_group_elements_act_by_similarities(name):
    G = parse_group(name)
    for g in G.generators().values():
        sides = [groups.boundary_action(g, s) for s in (1, 2)]
        assert sides[0].c + sides[1].c == 0
        for sim in sides:
            if sim.real_dim == 0 and sim.madic is None:
                continue
            K, s = qimaps.quasi_similarity_constants(sim.sampled(count=30, seed=2))
            assert K == pytest.approx(1, abs=1e-6)
            assert s == pytest.approx(sim.scale, rel=1e-6)


def test_similarity_rejects_bad_parts():
    s = analyze([[2, 0], [0, 3]])
    lam = s.block_diag(1)
    with pytest.raises(ValueError):
        qimaps.BoundarySimilarity(0, lam, np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2), s.classes(1), s.block_alphas(1))
    with pytest.raises(ValueError):
        qimaps.BoundarySimilarity(0, lam, np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros(2), s.classes(1), s.block_alphas(1))


# -- induced boundary maps --------------------------------------------------------------


def test_induced_identity_and_tree_shift():
    ball = tree_ball6()
    ident = qimaps.induced_boundary_map(lambda x: x, "tree", a=2, samples=ball)
    ends = list({spaces.tree_end(x) for x in ball if x.h <= -3})
    assert all(ident(y) == y.truncate(ident(y).end) for y in ends)
    shift = qimaps.induced_boundary_map(lambda x: TreeVertex(2, x.h + 1, x.addr), "tree", a=2, samples=ball)
    assert shift.c == 1
    K, s = qimaps.quasi_similarity_constants(shift.sampled(ends))
    assert K == pytest.approx(1) and s == pytest.approx(2)
    lo, hi = shift.scale_window()
    assert lo <= s <= hi


def test_induced_hyperbolic_dilation():
    pts = [GPoint(0.0, (x,)) for x in np.linspace(-3, 3, 13)]
    f = qimaps.induced_boundary_map(lambda p: GPoint(p.t + 1, tuple(math.e * np.array(p.v))), "G", a=math.e, samples=pts)
    xs = [np.array([x]) for x in np.linspace(-4, 4, 17)]
    assert all(f(x)[0] == pytest.approx(math.e * x[0]) for x in xs)
    K, s = qimaps.quasi_similarity_constants(f.sampled(xs))
    assert K == pytest.approx(1) and s == pytest.approx(math.e)


def test_not_height_respecting():
    with pytest.raises(NotHeightRespecting):
        qimaps.induced_boundary_map(lambda x: x.parent() if x.h % 2 else x, "tree", a=2, R=0.5, samples=tree_ball6())


def test_induced_maps_compose():
    for name in ("bs:1,2", "abc:[[2,1],[1,1]]"):
        G = parse_group(name)
        gens = list(G.generators().values())
        for g in gens:
            for h in gens:
                fg, fh = qimaps.induced_boundary_map(g), qimaps.induced_boundary_map(h)
                fgh = qimaps.induced_boundary_map(g * h)
                K, s = qimaps.quasi_similarity_constants(fgh.sampled(count=20, seed=1))
                target = math.exp(fg.alphas[0] * (fg.c + fh.c))
                assert abs(math.log(s / target)) <= 0.01 * math.log(math.exp(fg.alphas[0]))
                x = np.array([0.3])
                assert fgh(x)[0] == pytest.approx(fg.compose(fh)(x)[0])


# -- iterate detector ------------------------------------------------------------------------


def test_iterate_examples():
    assert str(qimaps.uniform_iterate_check((1, -1), 5)) == "Compatible"
    assert str(qimaps.uniform_iterate_check((1, -0.9), 5)) == "ViolatedAt(101)"
    assert str(qimaps.uniform_iterate_check((0, 0), 5)) == "Compatible"


def test_iterate_bracket():
    rng = random.Random(5)
    for _ in range(2000):
        c1 = Fraction(rng.randint(-50, 50), rng.randint(1, 9))
        c2 = Fraction(rng.randint(-50, 50), rng.randint(1, 9))
        R = Fraction(rng.randint(1, 50), rng.randint(1, 5))
        res = qimaps.uniform_iterate_check((c1, c2), R)
        c = abs(c1 + c2)
        if c == 0:
            assert res.kind == "Compatible"
        else:
            assert (res.s - 1) * c <= 2 * R < res.s * c


# -- psi ------------------------------------------------------------------------------------------


def test_psi_examples():
    G = AbcGroup([[1, -1], [1, 1]])
    P = G.split.P
    A, z = qimaps.psi(StructuredPair.from_element(G.identity()), P)
    assert np.allclose(A, np.eye(2)) and z == pytest.approx(1)
    A, z = qimaps.psi(StructuredPair.from_element(G.a()), P)
    assert np.allclose(A, np.eye(2), atol=1e-12) and abs(z - 1) < 1e-12
    half = StructuredPair(np.eye(2), np.zeros((0, 0)), 0.5, -0.5)
    A, z = qimaps.psi(half, P)
    assert np.allclose(A @ A, np.linalg.inv(P)) and np.allclose(A, orthogonal_power(P, -0.5))
    assert z == pytest.approx(-1)
    with pytest.raises(HeightMismatch):
        qimaps.psi(StructuredPair(np.eye(2), np.zeros((0, 0)), 1, 0.5), P)


@pytest.mark.parametrize("M", [[[2, 1], [1, 1]], [[1, -1], [1, 1]], [[0, 1], [-2, 0]], [[2, 0], [0, 3]]])
def test_psi_homomorphism(M):
    G = AbcGroup(M)
    P = G.split.P
    rng = random.Random(8)
    for _ in range(50):
        g1 = StructuredPair.from_element(random_word(G, rng, 4))
        g2 = StructuredPair.from_element(random_word(G, rng, 4))
        A12, z12 = qimaps.psi(g1.compose(g2), P)
        A1, z1 = qimaps.psi(g1, P)
        A2, z2 = qimaps.psi(g2, P)
        assert np.allclose(A12, A1 @ A2, atol=1e-9) and abs(z12 - z1 * z2) <= 1e-9
        # Gamma_M lies in the kernel
        assert np.allclose(A1, np.eye(len(A1)), atol=1e-9) and abs(z1 - 1) <= 1e-9


# -- straightening ------------------------------------------------------------------------------


def test_straightening_examples():
    K, alpha = 2.0, 0.5
    r = qimaps.straightening_bound(lambda x: 7.0, K, alpha, 1.0, 0.1, 10**6)
    assert r.empirical == 0 and r.ok
    r = qimaps.straightening_bound(lambda x: 0.5, K, alpha, 3.0, 0.2, 5)
    assert r.empirical == 0
    r = qimaps.straightening_bound(lambda x: K * min(abs(x) ** alpha, 1.0), K, alpha, 1.0, 0.1, 10**6)
    assert r.bound == pytest.approx(2 * K * 0.1 ** alpha, rel=1e-5)
    assert r.empirical == K and not r.ok


def test_almost_translation():
    T = AlmostTranslation((lambda d: math.sqrt(abs(d[0])), lambda d: 0.0), ((1.0, 0.5), (1.0, 1.0)))
    assert T((1.0, 4.0)) == (3.0, 4.0)
    samples = [(x,) for x in np.linspace(-2, 2, 21)]
    assert T.holder_violations(0, samples, lambda p, q: abs(p[0] - q[0])) == []
    tight = AlmostTranslation((lambda d: 5 * d[0], lambda d: 0.0), ((1.0, 1.0), (1.0, 1.0)))
    assert tight.holder_violations(0, samples, lambda p, q: abs(p[0] - q[0]))


# -- coarse comparisons ---------------------------------------------------------------------------


def test_coarse_distance_maps():
    ball = tree_ball6()
    ident = SampledMap.from_function(ball, lambda x: x, tree_distance)
    up = SampledMap.from_function(ball, lambda x: x.parent(), tree_distance)
    assert qimaps.coarse_distance_maps(ident, ident) == 0
    assert qimaps.coarse_distance_maps(ident, up) == 1
    pts = [float(x) for x in range(-5, 6)]
    d = lambda x, y: abs(x - y)  # noqa: E731
    f = SampledMap.from_function(pts, lambda x: x, d)
    g = SampledMap.from_function(pts, lambda x: x + 5, d)
    assert qimaps.coarse_distance_maps(f, g) == 5
    with pytest.raises(DomainMismatch):
        qimaps.coarse_distance_maps(f, SampledMap.from_function(pts[:-1], lambda x: x, d))


def test_qi_tameness_probe():
    L = LampGroup(2)
    ball = list(L.ball(5, "dl"))
    dist = lambda x, y: groups.word_length(x.inverse() * y, kind="dl")  # noqa: E731
    radius = lambda x: groups.word_length(x, kind="dl")  # noqa: E731
    ident = SampledMap.from_function(ball, lambda x: x, dist)
    assert qimaps.qi_tameness_probe([ident], radius_of=radius) == 0
    moves = [s for s, r in L.ball(3, "dl").items() if r <= 3]
    family = [SampledMap.from_function(ball, lambda x, s=s: x * s, dist) for s in moves]
    assert qimaps.qi_tameness_probe(family, radius_of=radius) == 3
    lefts = [SampledMap.from_function(ball, lambda x, s=s: s * x, dist) for s in L.generators("dl").values()]
    with pytest.raises(ValueError):
        qimaps.qi_tameness_probe(lefts, radius_of=radius)


def test_radial_certificate():
    ray = [TreeVertex(2, h) for h in range(-10, 11)]
    shifts = [lambda x, n=n: TreeVertex(2, x.h + n, x.addr) for n in range(-5, 6)]
    cert = qimaps.radial_certificate(shifts, TreeVertex(2, 0), ray, tree_distance)
    assert cert.R == 0
    off = qimaps.radial_certificate(shifts, TreeVertex(2, 0, (1,)), ray, tree_distance)
    assert off.R == 1
