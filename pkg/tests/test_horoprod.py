import itertools
import random

import pytest

from solvlab import horoprod
from solvlab.errors import HeightConstraintViolated, MalformedCoordinates, RadiusExceeded
from solvlab.groups import AbcGroup, act_on_model
from solvlab.horoprod import HPoint, ModelSpace, XPoint
from solvlab.madic import MAdic
from solvlab.spaces import TreeVertex


def test_make_point_constraints():
    sol = ModelSpace.sol()
    p = horoprod.make_point(sol, ((0.0, 0.0), (0.0, 0.0)))
    assert horoprod.height(p) == 0
    dl = ModelSpace.dl(2, 2)
    horoprod.make_point(dl, (TreeVertex(2, 3), TreeVertex(2, -3)))
    with pytest.raises(HeightConstraintViolated):
        horoprod.make_point(dl, (TreeVertex(2, 3), TreeVertex(2, -2)))
    with pytest.raises(MalformedCoordinates):
        horoprod.make_point(dl, (TreeVertex(3, 0), TreeVertex(2, 0)))
    with pytest.raises(MalformedCoordinates):
        horoprod.make_point(ModelSpace.xmbar([[2]]), XPoint((0.0,), 0.5, MAdic(2, 0)))


def test_round_trip_coordinates():
    for space, coords in [
        (ModelSpace.sol(), ((1.0, 2.0), (3.0, -2.0))),
        (ModelSpace.xmbar([[2, 1], [1, 1]]), XPoint((1.0, 2.0), 1.5)),
        (ModelSpace.xmbar([[2]]), XPoint((0.25,), 2, MAdic.from_digits(2, [1, 0, 1], val=-2))),
        (ModelSpace.xmbar([[2, 0], [0, 3]]), XPoint((0.25, 1.0), -1, MAdic.from_digits(6, [5, 1], val=1))),
    ]:
        p = horoprod.make_point(space, coords)
        assert horoprod.make_point(space, horoprod.coordinates(space, p)) == p


def test_dl_distance_examples():
    o = horoprod.dl_origin(2, 2)
    assert horoprod.dl_distance(o, o) == 0
    nb = horoprod.dl_neighbors(o)[0]
    assert horoprod.dl_distance(o, nb) == 1
    # same first coordinate, second coordinates merging two levels above
    u = HPoint(TreeVertex(2, 0), TreeVertex(2, 0, (0, 0)))
    v = HPoint(TreeVertex(2, 0), TreeVertex(2, 0, (0, 1)))
    assert horoprod.dl_distance(u, v) == 4


def test_dl_radius_cap():
    o = horoprod.dl_origin(2, 2)
    far = HPoint(TreeVertex(2, 0, (1,) * 9), TreeVertex(2, 0, (1,) * 9))
    with pytest.raises(RadiusExceeded):
        horoprod.dl_distance(o, far, R=6)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3)])
def test_dl_metric_on_ball(n, m):
    o = horoprod.dl_origin(n, m)
    ball = list(horoprod.dl_ball(o, 8))
    rng = random.Random(3)
    pts = rng.sample(ball, 40)
    d = horoprod.dl_distance_formula
    for x, y, z in itertools.product(pts, repeat=3):
        assert d(x, z) <= d(x, y) + d(y, z)
        assert d(x, y) == d(y, x)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3)])
def test_formula_matches_bfs_from_origin(n, m):
    o = horoprod.dl_origin(n, m)
    for p, r in horoprod.dl_ball(o, 6).items():
        assert horoprod.dl_distance_formula(o, p) == r


def test_coarse_distance():
    sol = ModelSpace.sol()
    o = horoprod.make_point(sol, ((0.0, 0.0), (0.0, 0.0)))
    t = 3.0
    p = horoprod.make_point(sol, ((0.0, t), (0.0, -t)))
    assert horoprod.coarse_distance(o, o, sol) == 0
    assert horoprod.coarse_distance(o, p, sol) == pytest.approx(2 * t)
    dl = ModelSpace.dl(2, 2)
    u = HPoint(TreeVertex(2, 0), TreeVertex(2, 0, (0, 0)))
    v = HPoint(TreeVertex(2, 0), TreeVertex(2, 0, (0, 1)))
    assert 4 / 3 - 4 <= horoprod.coarse_distance(u, v, dl) <= 12 + 4


def test_height_under_generators():
    G = AbcGroup([[2, 1], [1, 1]])
    space = ModelSpace.xmbar(G.split)
    x = XPoint((0.5, -1.0), 0.0)
    assert horoprod.height(horoprod.make_point(space, x)) == 0
    y = act_on_model(G.a(), x)
    assert horoprod.height(horoprod.make_point(space, y)) == 1
    z = act_on_model(G.b(1), x)
    assert horoprod.height(horoprod.make_point(space, z)) == 0


def test_parse():
    assert ModelSpace.parse("dl:2,3").branching == (2, 3)
    assert ModelSpace.parse("xmbar:[[2,0],[0,3]]").factor_kinds() == ("G", "T")
    assert ModelSpace.parse("xn:3").has_tree
    assert ModelSpace.parse("sol").factor_kinds() == ("G", "G")


@pytest.mark.parametrize("n,m", [(2, 2), (2, 3)])
def test_coarse_distance_tracks_dl_metric(n, m):
    space = ModelSpace.dl(n, m)
    o = horoprod.dl_origin(n, m)
    ball = horoprod.dl_ball(o, 10)
    for p, d in ball.items():
        c = horoprod.coarse_distance(o, p, space)
        assert d / 3 - 4 <= c <= 3 * d + 4
        assert (c == 0) == (p == o)
    rng = random.Random(0)
    pts = list(ball)
    for _ in range(2000):
        p, q = rng.sample(pts, 2)
        d, c = horoprod.dl_distance_formula(p, q), horoprod.coarse_distance(p, q, space)
        assert d / 3 - 4 <= c <= 3 * d + 4
        assert c == horoprod.coarse_distance(q, p, space)
