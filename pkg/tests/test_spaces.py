import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse import lil_matrix
from scipy.sparse.csgraph import shortest_path

from oracles import tree_bfs, tree_key
from solvlab import spaces
from solvlab.errors import BranchingMismatch, HeightMismatch, TruncationTooSmall
from solvlab.madic import MAdic
from solvlab.spaces import GPoint, TreeVertex, ZPoint
from solvlab.spectral import analyze

vertices = st.builds(
    lambda h, addr: TreeVertex(2, h, tuple(addr)),
    st.integers(-6, 6),
    st.lists(st.integers(0, 1), max_size=8),
)


def test_basic_tree_distances():
    u = TreeVertex(2, 0, (0, 1))
    assert spaces.tree_distance(u, u) == 0
    assert spaces.tree_distance(TreeVertex(2, 0, (0, 1)), TreeVertex(2, 0, (1, 1))) == 2
    assert spaces.tree_distance(u, u.parent().parent()) == 2
    with pytest.raises(BranchingMismatch):
        spaces.tree_distance(TreeVertex(2, 0), TreeVertex(3, 0))


@pytest.mark.parametrize("m,radius", [(2, 8), (3, 5)])
def test_tree_distance_matches_all_pairs_bfs(m, radius):
    center = TreeVertex(m, 0)
    ball = spaces.tree_ball(center, radius)
    keys = [tree_key(v) for v in ball]
    oracle_ball = tree_bfs(m, tree_key(center), radius)
    assert set(keys) == set(oracle_ball)
    index = {k: i for i, k in enumerate(keys)}
    from oracles import tree_neighbors

    adj = lil_matrix((len(keys), len(keys)))
    for k in keys:
        for w in tree_neighbors(m, k):
            if w in index:
                adj[index[k], index[w]] = 1
    # balls in trees are convex, so induced-subgraph distances are exact
    D = shortest_path(adj.tocsr(), unweighted=True, directed=False)
    for i, u in enumerate(ball):
        for j in range(i, len(ball)):
            assert spaces.tree_distance(u, ball[j]) == D[i, j]


@settings(max_examples=200, deadline=None)
@given(vertices, vertices, vertices)
def test_tree_metric_axioms(u, v, w):
    d = spaces.tree_distance
    assert d(u, v) == d(v, u)
    assert d(u, w) <= d(u, v) + d(v, w)
    assert (d(u, v) == 0) == (u == v)


def test_horofunction_tree():
    x = TreeVertex(2, 3, (1, 0, 1))
    assert spaces.horofunction(x, 10) == spaces.horofunction(x, 9) == -3
    on_ray = TreeVertex(2, 4)
    assert spaces.horofunction(on_ray, 10) == -4
    with pytest.raises(TruncationTooSmall):
        spaces.horofunction(TreeVertex(2, 0, (1, 1, 1, 1)), 1)


def test_horofunction_g():
    lam = [2.0]
    assert spaces.horofunction(GPoint(2, (0.0,)), 10, split=lam) == -2


@settings(max_examples=100, deadline=None)
@given(vertices)
def test_horofunction_stable_above_margin(x):
    T = spaces.stabilization_margin(x)
    assert spaces.horofunction(x, T) == spaces.horofunction(x, T + 1) == -x.h


def test_horospherical_distance():
    assert spaces.horospherical_distance(GPoint(0, (1.0, 2.0)), GPoint(0, (4.0, 6.0)), [2, 4]) == 5
    assert spaces.horospherical_distance(GPoint(1, (2.0,)), GPoint(1, (0.0,)), [2]) == 1
    assert math.isclose(spaces.horospherical_distance(GPoint(1, (2.0, 4.0)), GPoint(1, (0.0, 0.0)), [2, 4]), math.sqrt(2))
    with pytest.raises(HeightMismatch):
        spaces.horospherical_distance(GPoint(1, (0.0,)), GPoint(0, (0.0,)), [2])


def test_coarse_distance_g():
    p = GPoint(0, (0.0,))
    assert spaces.coarse_distance_G(p, p, [2]) == 0
    assert spaces.coarse_distance_G(p, GPoint(0, (8.0,)), [2]) == pytest.approx(6)
    assert spaces.coarse_distance_G(GPoint(5, (0.0,)), p, [2]) == 5


@pytest.mark.parametrize("lam", [[2.0], [2.0, 3.0]])
def test_coarse_tracks_log_of_horospherical(lam, ):
    # the surrogate is logarithmic in the horospherical distance: 2 log_lam(r)
    rng = np.random.default_rng(7)
    lam_min = min(lam)
    for _ in range(1000):
        t = float(rng.integers(-10, 11))
        v = rng.uniform(-1000, 1000, len(lam))
        w = rng.uniform(-1000, 1000, len(lam))
        p, q = GPoint(t, tuple(v)), GPoint(t, tuple(w))
        r = spaces.horospherical_distance(p, q, lam)
        ref = 2 * max(0.0, math.log(r) / math.log(lam_min)) if r > 0 else 0.0
        c = spaces.coarse_distance_G(p, q, lam)
        assert ref / 2 - 2 <= c <= 2 * ref + 2


def test_vertical_geodesic():
    assert spaces.vertical_geodesic(TreeVertex(2, 0)) == MAdic(2, 0)
    assert spaces.vertical_geodesic(GPoint(3, (1.5, 2.0))) == (1.5, 2.0)
    z = ZPoint(TreeVertex(2, 0, (1,)), (0.5,))
    y, v = spaces.vertical_geodesic(z)
    assert y == MAdic.from_digits(2, [1], val=-1) and v == (0.5,)


def test_tree_end_and_vertex_on_end_round_trip():
    x = TreeVertex(3, -2, (1, 2, 0, 1))
    y = spaces.tree_end(x)
    assert spaces.vertex_on_end(y, x.h) == x
    assert spaces.vertex_on_end(y, x.h + 2) == x.parent().parent()
