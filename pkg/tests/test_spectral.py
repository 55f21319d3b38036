import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solvlab.errors import EigenvalueOnUnitCircle, EmptyBlock, NonIntegralDeterminantPower, NotDiagonalizable, SingularMatrix
from solvlab.spectral import absolute_power, analyze, classify, orthogonal_power, snowflake_exponents


def reconstruct(s):
    return s.S @ s.Mbar @ s.P @ s.Sinv


def test_scalar():
    s = analyze([[2]])
    assert s.det == 2 and s.n1 == 1 and s.n2 == 0
    assert np.allclose(s.Mbar, [[2]])
    assert classify(s) == "ScalarTree"


def test_golden_matrix_against_characteristic_polynomial():
    s = analyze([[2, 1], [1, 1]])
    roots = sorted(np.roots([1, -3, 1]))  # lambda^2 - 3 lambda + 1
    assert s.det == 1
    assert np.allclose(np.diag(s.Mbar1), [roots[1]])
    assert np.allclose(np.diag(s.Mbar2), [1 / roots[0]])
    assert classify(s) == "SolLike"


def test_diagonal_expanding():
    s = analyze([[2, 0], [0, 3]])
    assert s.det == 6 and s.n2 == 0
    assert sorted(np.diag(s.Mbar1)) == [2, 3]
    assert classify(s) == "Expanding"
    assert s.exact is not None


@pytest.mark.parametrize(
    "M",
    [[[2, 1], [1, 1]], [[2, 0], [0, 3]], [[1, -1], [1, 1]], [[4, 1], [1, 0]], [[3, 1, 0], [1, 2, 1], [0, 1, 2]], [[0, 1], [-2, 0]]],
)
def test_reconstruction_and_orthogonality(M):
    s = analyze(M)
    assert np.max(np.abs(reconstruct(s) - np.array(M))) <= 1e-9
    assert np.max(np.abs(s.P @ s.P.T - np.eye(s.n))) <= 1e-9
    assert s.n1 + s.n2 == s.n
    assert s.det == abs(round(np.linalg.det(np.array(M, dtype=float))))
    assert np.all(np.diag(s.Mbar1) > 1) and np.all(np.diag(s.Mbar2) > 1)


def test_rejections():
    with pytest.raises(EigenvalueOnUnitCircle):
        analyze([[1, 1], [0, 2]])
    with pytest.raises(NotDiagonalizable):
        analyze([[2, 1], [0, 2]])
    with pytest.raises(SingularMatrix):
        analyze([[2, 0], [0, 0]])


def test_absolute_power():
    s = analyze([[4]])
    Mk, dk = absolute_power(s, "1/2")
    assert np.allclose(Mk, [[2]]) and dk == 2
    s2 = analyze([[2]])
    with pytest.raises(NonIntegralDeterminantPower):
        absolute_power(s2, "1/2")
    Mk, dk = absolute_power(s2, 1)
    assert np.allclose(Mk, s2.Mbar) and dk == 2


def test_absolute_power_additive():
    s = analyze([[2, 1], [1, 1]])
    a, _ = absolute_power(s, 2)
    b, _ = absolute_power(s, 3)
    c, _ = absolute_power(s, 5)
    assert np.max(np.abs(a @ b - c)) <= 1e-12 * np.max(c)


def test_snowflake_exponents():
    assert snowflake_exponents(analyze([[2, 0], [0, 4]])) == pytest.approx([1, 0.5])
    assert snowflake_exponents(analyze([[3]])) == [1]
    assert snowflake_exponents(analyze([[2, 0, 0], [0, 2, 0], [0, 0, 8]])) == pytest.approx([1, 1 / 3])
    with pytest.raises(EmptyBlock):
        snowflake_exponents(analyze([[2]]), 2)


def test_fractional_rotation_power():
    s = analyze([[1, -1], [1, 1]])
    half = orthogonal_power(s.P, 0.5)
    assert np.allclose(half @ half, s.P)
    with pytest.raises(ValueError):
        orthogonal_power(np.diag([1.0, -1.0]), 0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4))
def test_classify_invariant_under_transpose(a, b, c, d):
    M = [[a, b], [c, d]]
    try:
        s = analyze(M)
    except Exception:
        return
    t = analyze([[a, c], [b, d]])
    assert classify(s) == classify(t)
    if s.det == 1:
        assert classify(s) not in ("Expanding", "Mixed")
    assert np.max(np.abs(reconstruct(s) - np.array(M))) <= 1e-9


def test_classify_invariant_under_unimodular_conjugation():
    M = np.array([[2, 1], [1, 1]])
    U = np.array([[1, 1], [0, 1]])
    Uinv = np.array([[1, -1], [0, 1]])
    conj = (U @ M @ Uinv).tolist()
    assert classify(analyze(conj)) == classify(analyze(M.tolist()))
    assert math.isclose(analyze(conj).Mbar1[0, 0], analyze(M.tolist()).Mbar1[0, 0])
