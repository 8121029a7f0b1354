import math
from fractions import Fraction

import numpy as np
import pytest

from ffap import runtime
from ffap.ffcore import FieldParams
from ffap.polymap import diagonal_map, from_monomials, is_nondegenerate, random_diagonal, random_polymap, sum_of_powers
from ffap.variety import (
    PointSet, chevalley_warning_check, dim_proxy, generic_singular_experiment, wstar_bound, wstar_bound_check,
    level_set, level_set_sizes, main_condition, singular_locus, wstar_count, wstar_lambda, wstar_sample,
    wstar_visit_rate,
)

from . import oracles


def test_level_sets_of_circle():
    Q = sum_of_powers(2, 2, 5)
    S0 = level_set(Q, [0])
    assert S0.count == 9
    S1 = level_set(Q, [1])
    want = {oracles.index(x, 5) for x in [(1, 0), (4, 0), (0, 1), (0, 4)]}
    assert set(S1.indices().tolist()) == want
    with pytest.raises(ValueError):
        level_set(Q, [0, 1])


@pytest.mark.parametrize("seed", range(4))
def test_level_sets_partition(seed):
    P = random_polymap(5, 3, 2, 2, seed)
    sizes = level_set_sizes(P)
    assert sum(sizes.values()) == 125
    for v, c in list(sizes.items())[:5]:
        assert level_set(P, v).count == c


def test_singular_locus_examples():
    for p, n, d in [(5, 3, 2), (7, 2, 3)]:
        S = singular_locus(sum_of_powers(n, d, p))
        assert S.indices().tolist() == [0]
    S = singular_locus(diagonal_map([[1, 0]], 2, 5))
    assert S.count == 5
    assert all(S.params.decode(i)[0] == 0 for i in S.indices())


def test_singular_locus_matches_oracle():
    P = random_polymap(5, 3, 2, 2, 3)
    S = singular_locus(P)
    terms = [[(c, e) for r, e, c in P.monomials() if r == i] for i in range(2)]
    want = set()
    for x in oracles.points(5, 3):
        J = []
        for t in terms:
            J.append([sum(c * e[j] * math.prod(x[k] ** (e[k] - (k == j)) for k in range(3)) for c, e in t if e[j]) % 5
                      for j in range(3)])
        if oracles.rank_mod(J, 5) < 2:
            want.add(oracles.index(x, 5))
    assert set(S.indices().tolist()) == want


def test_nondegenerate_singular_points_have_few_nonzeros():
    found = 0
    for seed in range(40):
        A = random_diagonal(1, 4, 5, seed)
        if not is_nondegenerate(A, 5):
            continue
        found += 1
        S = singular_locus(diagonal_map(A, 2, 5))
        for i in S.indices():
            assert np.count_nonzero(S.params.decode(i)) < 2
    assert found > 0


def test_dim_proxy():
    params = FieldParams(5, 3)
    assert dim_proxy(PointSet.from_indices(params, [0])) == 0
    plane = PointSet(params, params.coords[:, 2] == 0)
    assert abs(dim_proxy(plane) - 2) < 1e-12
    assert abs(dim_proxy(level_set(sum_of_powers(2, 2, 5), [0])) - math.log(9, 5)) < 1e-12


def test_pointset_ops_and_formats(tmp_path):
    params = FieldParams(3, 2)
    A = PointSet.from_indices(params, [0, 4, 8])
    B = PointSet.from_indices(params, [4, 5])
    assert (A | B).indices().tolist() == [0, 4, 5, 8]
    assert (A & B).indices().tolist() == [4]
    assert (A - B).indices().tolist() == [0, 8]
    assert (A & B).issubset(A) and not B.issubset(A)
    assert 4 in A and 5 not in A
    assert PointSet.from_text(A.to_text()) == A
    assert PointSet.from_blob(A.to_blob()) == A
    assert A.to_text().splitlines() == ["# p=3 n=2 count=3", "0", "4", "8"]
    with pytest.raises(ValueError):
        PointSet.from_text("1\n2\n")
    with pytest.raises(ValueError):
        PointSet.from_indices(params, [9])
    assert PointSet.random(params, 0.5, 1) == PointSet.random(params, 0.5, 1)


def test_wstar_examples():
    Q = sum_of_powers(2, 2, 5)
    assert wstar_lambda(Q, [1]) == 1
    C = sum_of_powers(2, 3, 7)
    assert wstar_lambda(C, [1]) == 169 == 13**2
    assert wstar_count(C) == 169
    for c in range(1, 7):
        assert wstar_lambda(C, [c]) == 169
    with pytest.raises(ValueError):
        wstar_lambda(C, [0])


@pytest.mark.parametrize("p,n,d,R,seed", [(5, 2, 2, 2, 0), (5, 2, 3, 2, 1), (3, 2, 2, 1, 2), (7, 1, 3, 1, 3), (5, 2, 4, 1, 4)])
def test_wstar_against_oracle(p, n, d, R, seed):
    P = random_polymap(p, n, d, R, seed)
    rows = [[(c, e) for r, e, c in P.monomials() if r == i] for i in range(R)]
    lam = [1] + [2] * (R - 1)
    full, lamc = oracles.wstar_counts(rows, n, d, p, lam)
    assert wstar_count(P) == full
    assert wstar_lambda(P, lam) == lamc


def test_wstar_sets_nested_and_diagonal():
    P = random_polymap(5, 2, 3, 2, 7)
    N = P.params.size
    _, W = wstar_count(P, return_set=True)
    Wset = {tuple(t) for t in W.tolist()}
    for lam in [(1, 0), (0, 1), (1, 3), (2, 2)]:
        _, Wl = wstar_lambda(P, lam, return_set=True)
        assert {tuple(t) for t in Wl.tolist()} <= Wset
    for h in singular_locus(P).indices():
        assert (int(h), int(h)) in Wset
    assert W.shape[1] == 2 and np.all(W < N)


def test_wstar_parallel_identical():
    P = random_polymap(5, 3, 3, 2, 8)
    with runtime.configure(workers=1):
        a = wstar_count(P, return_set=True)
    with runtime.configure(workers=4):
        b = wstar_count(P, return_set=True)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])


def test_wstar_budget_and_sampling():
    P = sum_of_powers(2, 3, 7)
    with runtime.configure(budget=1000):
        with pytest.raises(runtime.BudgetExceeded):
            wstar_count(P)
    est = wstar_sample(P, 4000, 1)
    assert abs(est["estimate"] - 169) < 5 * est["estimate_stderr"] + 1
    assert wstar_sample(P, 100, 2) == wstar_sample(P, 100, 2)


def test_visit_rate_reports():
    r = wstar_visit_rate(10**6)
    assert r["visits"] >= 10**6 and r["rate"] > 0


def test_wstar_bound():
    assert wstar_bound(sum_of_powers(2, 3, 7), 2) == 4 * 7 * 49
    assert wstar_bound(sum_of_powers(2, 2, 5), 4) == Fraction(1, 5)
    rep = wstar_bound_check(sum_of_powers(2, 3, 7), 2)
    assert rep.passed and rep.lhs == 169 and rep.rhs == 1372


def test_chevalley_warning_examples():
    line = from_monomials(5, 2, 1, 1, [(0, (1, 0), 1), (0, (0, 1), 1)])
    r = chevalley_warning_check([line])
    assert (r.lhs, r.rhs, r.passed) == (5, 5, True)
    r = chevalley_warning_check([sum_of_powers(3, 2, 5)])
    assert (r.lhs, r.rhs, r.passed) == (25, 5, True)
    lin = from_monomials(5, 4, 1, 1, [(0, (1, 0, 0, 0), 1), (0, (0, 1, 0, 0), 1)])
    quad = from_monomials(5, 4, 2, 1, [(0, (1, 0, 1, 0), 1), (0, (0, 1, 1, 0), 4)])
    r = chevalley_warning_check([lin, quad])
    zeros = sum(1 for x in oracles.points(5, 4) if (x[0] + x[1]) % 5 == 0 and (x[0] * x[2] - x[1] * x[2]) % 5 == 0)
    assert r.lhs == zeros and r.rhs == 5 and r.passed
    r = chevalley_warning_check([sum_of_powers(2, 2, 5)])
    assert r.passed is None


def test_main_condition():
    r = main_condition(5, 100, 2, 1, 100, 0.01)
    assert abs(r.alpha - math.log(2, 5)) < 1e-15
    assert r.gamma == Fraction(1, 100)
    assert abs(r.slack - (1 - math.log(2, 5) - 0.05)) < 1e-12 and r.satisfied
    assert not main_condition(5, 10, 2, 10, 10, 0.0).satisfied
    with pytest.raises(ValueError):
        main_condition(5, 10, 5, 1, 10, 0.0)


def test_generic_experiment_reports():
    out = generic_singular_experiment(5, 3, 2, 1, 3, 0)
    assert len(out) == 3 and all(0 <= r["size"] <= 125 for r in out)
    assert out == generic_singular_experiment(5, 3, 2, 1, 3, 0)
