import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffap import runtime
from ffap.ffcore import DenseFunction, FieldParams, char_e, char_table, dot, fourier, inverse_fourier, is_prime

from . import oracles


def test_is_prime():
    assert [q for q in range(30) if is_prime(q)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_params_validation():
    with pytest.raises(ValueError):
        FieldParams(6, 2)
    with pytest.raises(ValueError):
        FieldParams(65537, 1)
    with pytest.raises(runtime.BudgetExceeded):
        FieldParams(5, 20)
    with pytest.raises(runtime.BudgetExceeded):
        FieldParams(5, 3, limit=100)
    assert FieldParams(65521, 1).size == 65521


@pytest.mark.parametrize("p,n", [(2, 5), (3, 3), (5, 2), (7, 2), (11, 1)])
def test_encoding_bijective(p, n):
    P = FieldParams(p, n)
    idx = np.arange(P.size)
    assert np.array_equal(P.encode(P.decode(idx)), idx)
    assert [tuple(r) for r in P.coords] == oracles.points(p, n)


def test_add_and_scale_coordinatewise():
    P = FieldParams(5, 3)
    rng = np.random.default_rng(0)
    for a, b, k in rng.integers(0, P.size, size=(50, 3)):
        xa, xb = P.decode(a), P.decode(b)
        assert P.add(a, b) == P.encode((xa + xb) % 5)
        assert P.scale_add(a, b, k) == P.encode((xa + k * xb) % 5)
        assert P.add(a, P.neg(a)) == 0


def test_char_e_examples():
    P = FieldParams(5, 1)
    assert char_e(0, P) == 1
    for a in range(5):
        assert abs(char_e(a, P) * char_e((5 - a) % 5, P) - 1) < 1e-12
    assert abs(sum(char_e(a, P) for a in range(5))) < 1e-12
    assert np.allclose(char_table(7), [oracles.e(a, 7) for a in range(7)], atol=1e-15)


def test_dot():
    assert dot((1, 2), (3, 4), 5) == 1  # 3 + 8 = 11
    assert dot((1, 2), (0, 0), 5) == 0
    rng = np.random.default_rng(1)
    for x, y in rng.integers(0, 7, size=(20, 2, 3)):
        assert dot(x, y, 7) == dot(y, x, 7)
    with pytest.raises(ValueError):
        dot((1, 2), (1, 2, 3), 5)


def test_dense_function_bounded_flag_and_immutability():
    P = FieldParams(3, 1)
    with pytest.raises(ValueError):
        DenseFunction(P, [1, 2, 0], bounded=True)
    DenseFunction(P, [1, 1 + 1e-13, 0], bounded=True)
    f = DenseFunction(P, [1, 0, 0])
    with pytest.raises(ValueError):
        f.table[0] = 2
    with pytest.raises(ValueError):
        DenseFunction(P, [1, 0])


def test_fourier_examples():
    P = FieldParams(5, 1)
    delta = DenseFunction.indicator(P, [1, 0, 0, 0, 0])
    assert np.allclose(fourier(delta).table, 0.2, atol=1e-15)
    one = fourier(DenseFunction.constant(FieldParams(5, 2), 1)).table
    assert abs(one[0] - 1) < 1e-15 and np.max(np.abs(one[1:])) < 1e-15


def test_fourier_matches_direct_sum():
    P = FieldParams(3, 2)
    rng = np.random.default_rng(2)
    t = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    assert np.allclose(fourier(DenseFunction(P, t)).table, oracles.dft(list(t), 3, 2), atol=1e-12)


def test_parseval_and_inversion():
    P = FieldParams(5, 2)
    rng = np.random.default_rng(4)
    t = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    f = DenseFunction(P, t)
    fh = fourier(f).table
    assert abs(np.sum(np.abs(fh) ** 2) - np.mean(np.abs(t) ** 2)) < 1e-12
    assert np.max(np.abs(inverse_fourier(fourier(f)).table - t)) < 1e-12


def test_character_orthogonality():
    P = FieldParams(3, 3)
    for xi in itertools.product(range(3), repeat=3):
        m = DenseFunction.linear_phase(P, xi).mean()
        assert abs(m - (1 if not any(xi) else 0)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 5, 7]), st.integers(1, 3), st.data())
def test_roundtrip_property(p, n, data):
    P = FieldParams(p, n)
    i = data.draw(st.integers(0, P.size - 1))
    assert int(P.encode(P.decode(i))) == i
    j = data.draw(st.integers(0, P.size - 1))
    assert int(P.add(i, j)) == oracles.index(oracles.add(oracles.points(p, n)[i], oracles.points(p, n)[j], p), p)
