import itertools

import pytest

from solvlab import furman, groups
from solvlab.furman import make_envelope, q_map, q_point, verify_lemma_5_1


@pytest.fixture(scope="module")
def flip_env():
    return make_envelope("ll:2", "flip")


def test_envelope_multiplication_is_associative(flip_env):
    env = flip_env
    elems = [env.element(g, j) for g in env.ball(2) for j in range(env.order)]
    for x, y, z in itertools.product(elems[:25], repeat=3):
        assert env.multiply(env.multiply(x, y), z) == env.multiply(x, env.multiply(y, z))


def test_q_map_examples(flip_env):
    env = make_envelope("bs:1,2", "trivial")
    e = env.group.identity()
    ident = q_map(env.element(e), env, 3)
    assert all(ident(x) == x for x in ident.domain)
    g0 = env.group.a() * env.group.b()
    left = q_map(env.element(g0), env, 3)
    assert all(left(x) == g0 * x for x in left.domain)
    flip = q_map(flip_env.element(flip_env.group.identity(), 1), flip_env, 3)
    assert all(flip(x) == flip_env.group.flip(x) for x in flip.domain)
    # the F coordinate of a trivial extension is ignored
    tw = q_map(env.element(g0, 1), env, 3)
    assert all(tw(x) == g0 * x for x in tw.domain)


def test_section_restricts_to_translations(flip_env):
    env = flip_env
    for g in env.ball(2):
        for x in env.ball(2):
            assert q_point(env.element(g), x, env) == g * x


def test_trivial_envelope():
    env = make_envelope("bs:1,2", "none")
    rep = verify_lemma_5_1(env, R=4)
    assert (rep.K, rep.C, rep.B) == (1, 0, 0)
    assert rep.restriction_exact and rep.composition_defect == 0


def test_direct_product_envelope():
    rep = verify_lemma_5_1(make_envelope("bs:1,2", "trivial"), R=4)
    assert (rep.K, rep.C) == (1, 0) and rep.composition_defect == 0 and rep.B == 0
    assert rep.uniform and rep.stability["stable"]


def test_flip_envelope(flip_env):
    rep = verify_lemma_5_1(flip_env, R=4)
    assert rep.K == 1 and rep.C <= 2 * rep.B
    assert rep.B == max(groups.word_length(x.inverse() * flip_env.group.flip(x), kind="dl") for x in flip_env.ball(4))
    assert rep.restriction_exact and rep.cocycle_ok and rep.uniform
    assert set(furman.CSV_COLUMNS) <= set(rep.rows[0])


def test_radius_precondition(flip_env):
    with pytest.raises(ValueError):
        verify_lemma_5_1(flip_env, R=3)
    with pytest.raises(ValueError):
        make_envelope("bs:1,2", "flip")
