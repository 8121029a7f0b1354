"""Named verification suites.  Each returns a list of VerificationReports.

Every suite is deterministic: instances come from fixed seeds, so two runs
(at any worker count) produce identical numeric fields.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import runtime
from .apcount import counterexample_family, decomposition_check, von_neumann_check
from .ffcore import DenseFunction, FieldParams, fourier
from .gowers import (
    balanced_indicator, gowers_norm, gowers_u2_fourier, monotonicity_check, nonzero_vectors,
    phase_function, prop_norm_check,
)
from .polymap import PolyMap, SymmetricForm, diagonal_map, random_polymap, sum_of_powers
from .reports import VerificationReport, inequality
from .subspace import (
    LinearSubspace, extension_candidates_direct, extension_candidates_multilinear,
    greedy_max_subspace, maximality_certificate,
)
from .variety import PointSet, chevalley_warning_check, wstar_bound_check, level_set, wstar_count, wstar_lambda, wstar_visit_rate

TOL_ID = runtime.TOL_IDENTITY

PHASE_SHAPES = [(5, 2, 2, 1), (5, 3, 2, 1), (7, 2, 3, 1), (5, 2, 2, 2)]


def structured_map(p: int, n: int, d: int, R: int) -> tuple[PolyMap, int]:
    """A map with analytically known singular-locus codimension K.

    R = 1: sum of d-th powers; the singular locus is {0}, so K = n.
    R > 1: row i is the sum of x_j^d over the coordinate block j = i mod R.  The
           Jacobian loses rank exactly where a whole block vanishes, so the locus
           is a union of coordinate subspaces and K = smallest block = n // R.
    """
    if R == 1:
        return sum_of_powers(n, d, p), n
    A = np.zeros((R, n), dtype=np.int64)
    for j in range(n):
        A[j % R, j] = 1
    return diagonal_map(A, d, p), n // R


def phase_instances() -> list[tuple[str, PolyMap, int | None]]:
    out = []
    for p, n, d, R in PHASE_SHAPES:
        P, K = structured_map(p, n, d, R)
        out.append((f"structured({p},{n},{d},{R})", P, K))
        for seed in (1, 2):
            out.append((f"random({p},{n},{d},{R};seed={seed})", random_polymap(p, n, d, R, seed), None))
    return out


def _perturb(P: PolyMap) -> PolyMap:
    """Add 1 to the first stored coefficient of the first form (negative control)."""
    f = P.forms[0]
    coeffs = dict(f.items)
    t = next(iter(coeffs)) if coeffs else (0,) * P.d
    coeffs[t] = coeffs.get(t, 0) + 1
    return PolyMap(P.p, P.n, P.d, (SymmetricForm.from_dict(P.p, P.n, P.d, coeffs),) + P.forms[1:])


def suite_phase_equality(fault: bool = False) -> list[VerificationReport]:
    """U^d norm of e(alpha . P) equals |W*(alpha)| / p^{(d-1)n} for every alpha != 0."""
    reports = []
    for name, P, _ in phase_instances():
        Q = _perturb(P) if fault else P
        space = P.params.size ** (P.d - 1)
        wall = wstar_count(P)
        for a in nonzero_vectors(P.p, P.R):
            rep = gowers_norm(phase_function(P, a), P.d)
            w = wstar_lambda(Q, a)
            reports.append(inequality(
                "phase_norm_equality", rep.raw_power, w / space, "==", runtime.ineq_tol(),
                details={"wstar_lambda": w, "wstar": wall, "wstar_upper": wall / space,
                         "upper_ok": rep.raw_power <= wall / space + runtime.ineq_tol()},
                instance={"map": name, "alpha": list(a)},
            ))
    return reports


PROP_INSTANCES = [((5, 3, 2), 3, None), ((7, 2, 3), 2, [(0,), (1,)])]


def _prop_cases():
    for (p, n, d), K, vs in PROP_INSTANCES:
        P = sum_of_powers(n, d, p)
        for v in vs if vs is not None else [(a,) for a in range(p)]:
            yield P, v, K


def suite_prop_norm(fault: bool = False) -> list[VerificationReport]:
    return [prop_norm_check(P, v, K) for P, v, K in _prop_cases()]


def suite_wstar_bound(fault: bool = False) -> list[VerificationReport]:
    """Only maps with analytically certified K; random maps have no certified codimension."""
    reports = []
    for p, n, d, R in PHASE_SHAPES:
        P, K = structured_map(p, n, d, R)
        reports.append(wstar_bound_check(P, K))
    return reports


def random_bounded(params: FieldParams, rng: np.random.Generator) -> DenseFunction:
    r = rng.random(params.size)
    theta = rng.random(params.size)
    return DenseFunction(params, r * np.exp(2j * np.pi * theta), bounded=True)


def _worst(name: str, reps: list[VerificationReport], **inst) -> VerificationReport:
    """Aggregate a family of <= checks into one report on the largest lhs - rhs."""
    slack = [r.lhs - r.rhs for r in reps]
    worst = max(slack)
    return VerificationReport(
        name, worst, reps[0].tolerance, "<=", all(r.passed for r in reps), reps[0].tolerance,
        details={"checks": len(reps), "violations": sum(not r.passed for r in reps)}, instance=inst,
    )


def suite_monotonicity_vn(fault: bool = False, pairs: int = 100) -> list[VerificationReport]:
    params = FieldParams(5, 2)
    rng = np.random.default_rng(20240401)
    funcs = [(random_bounded(params, rng), random_bounded(params, rng)) for _ in range(pairs)]
    out = []
    for l in (2, 3):
        out.append(_worst("monotonicity", [monotonicity_check(f, l) for f, _ in funcs], l=l, pairs=pairs))
        out.append(_worst("von_neumann", [von_neumann_check(f, g, l) for f, g in funcs], l=l, pairs=pairs))
    return out


def suite_decomposition(fault: bool = False, triples: int = 100) -> list[VerificationReport]:
    params = FieldParams(5, 2)
    rng = np.random.default_rng(20240402)
    out = []
    for _ in range(triples):
        A = PointSet(params, rng.random(params.size) < rng.random())
        S = PointSet(params, rng.random(params.size) < rng.random())
        out.append(decomposition_check(A, S, 3, float(rng.random())))
    for P, v, K in _prop_cases():
        S = level_set(P, v)
        A = PointSet.random(P.params, 0.5, 7)
        rep = decomposition_check(A, S, P.d, float(P.p) ** -P.R)
        rep.instance.update(v=list(v), kind="level_set")
        out.append(rep)
    return out


def suite_counterexample(fault: bool = False) -> list[VerificationReport]:
    _, _, rep = counterexample_family(5, 3, 2)
    out = [rep]
    # parallelogram law at every pair, exact integer arithmetic
    Q = sum_of_powers(2, 2, 5)
    vals = Q.values[:, 0]
    params = Q.params
    idx = np.arange(params.size)
    x, y = np.meshgrid(idx, idx, indexing="ij")
    lhs = vals[x] - 2 * vals[params.add(x, y)] + vals[params.scale_add(x, y, 2)]
    bad = int(np.count_nonzero((lhs - 2 * vals[y]) % 5))
    out.append(VerificationReport("parallelogram", bad, 0, "==", bad == 0, instance={"p": 5, "n": 2}))
    return out


def suite_concentration(fault: bool = False) -> list[VerificationReport]:
    """| |S_v| p^{R-n} - 1 | <= p^R ||1_S - p^{-R}||_{U^d}, with the U^1 identity checked too."""
    out = []
    for P, v, K in _prop_cases():
        S = level_set(P, v)
        g = balanced_indicator(S, float(P.p) ** -P.R)
        ud = gowers_norm(g, P.d).value
        u1 = gowers_norm(g, 1).value
        lhs = abs(S.count * float(P.p) ** (P.R - P.n) - 1)
        rep = inequality("concentration", lhs, P.p**P.R * ud, "<=", runtime.ineq_tol(),
                         instance={"p": P.p, "n": P.n, "d": P.d, "v": list(v)})
        exact_u1 = abs(S.count / P.params.size - float(P.p) ** -P.R)
        rep.details = {"U1": u1, "U1_identity_gap": abs(u1 - exact_u1), "Ud": ud}
        rep.passed = rep.passed and abs(u1 - exact_u1) <= TOL_ID
        out.append(rep)
    return out


def chevalley_warning_instances(count: int = 20, seed: int = 20240403) -> list[list[PolyMap]]:
    """Random systems of homogeneous forms with total degree D < n (p in {5, 7}, n <= 5)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = (5, 7)[len(out) % 2]
        n = int(rng.integers(2, 6))
        polys, D = [], 0
        while True:
            d = int(rng.integers(1, 4))
            if D + d >= n:
                break
            polys.append(random_polymap(p, n, d, 1, int(rng.integers(0, 2**31))))
            D += d
        if polys:
            out.append(polys)
    return out


def suite_chevalley_warning(fault: bool = False) -> list[VerificationReport]:
    return [chevalley_warning_check(polys) for polys in chevalley_warning_instances()]


SUBSPACE_MAPS = [
    ("x1^2+x2^2", diagonal_map([[1, 1]], 2, 5), 1),
    ("x1^2+x2^2+x3^2+x4^2", diagonal_map([[1, 1, 1, 1]], 2, 5), 2),
    ("x1^2+2x2^2", diagonal_map([[1, 2]], 2, 5), 0),
]


def subspace_desk_instances(count: int = 50, seed: int = 20240404) -> list[tuple[PolyMap, LinearSubspace]]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(2, 4))
        R = int(rng.integers(1, 3))
        s = int(rng.integers(0, 2**31))
        if i % 2:
            P = diagonal_map(rng.integers(0, 5, size=(R, n)), d, 5)
        else:
            P = random_polymap(5, n, d, R, s)
        M = greedy_max_subspace(P, seed=s, cross_check=False)
        keep = int(rng.integers(0, M.dim + 1))
        out.append((P, LinearSubspace(P.params, M.basis[:keep])))
    return out


def suite_subspace(fault: bool = False) -> list[VerificationReport]:
    out = []
    for name, P, expected in SUBSPACE_MAPS:
        M = greedy_max_subspace(P)
        cert = maximality_certificate(P, M)
        out.append(VerificationReport(
            "greedy_subspace", M.dim, expected, "==", M.dim == expected and cert["maximal"],
            details={"certificate": cert, "basis": M.basis.tolist()}, instance={"map": name},
        ))
    agree = 0
    insts = subspace_desk_instances()
    for P, M in insts:
        agree += extension_candidates_multilinear(P, M) == extension_candidates_direct(P, M)
    out.append(VerificationReport("extension_tests_agree", agree, len(insts), "==", agree == len(insts)))
    return out


def strategy_instances() -> list[tuple[DenseFunction, int]]:
    rng = np.random.default_rng(20240405)
    out = []
    for p, n, ls in [(5, 1, (1, 2, 3, 4, 5)), (3, 2, (1, 2, 3, 4)), (5, 2, (1, 2, 3, 4)), (7, 2, (1, 2, 3)), (3, 3, (1, 2, 3))]:
        params = FieldParams(p, n)
        for l in ls:
            if p ** ((l + 1) * n) > 10**7:
                continue
            out.append((random_bounded(params, rng), l))
            out.append((DenseFunction.indicator(params, rng.random(params.size) < 0.4), l))
    P = sum_of_powers(2, 3, 7)
    out.append((phase_function(P, [1]), 3))
    return out


def suite_strategies(fault: bool = False) -> list[VerificationReport]:
    out = []
    for f, l in strategy_instances():
        a = gowers_norm(f, l, "definitional").raw_power
        b = gowers_norm(f, l, "recursive").raw_power
        out.append(inequality("definitional_vs_recursive", abs(a - b), 1e-10, "<=", 0.0,
                              instance={"p": f.params.p, "n": f.params.n, "l": l}))
    rng = np.random.default_rng(20240406)
    params = FieldParams(5, 2)
    fr, pv = [], []
    for _ in range(100):
        f = random_bounded(params, rng)
        fr.append(abs(gowers_u2_fourier(f).value - gowers_norm(f, 2).value))
        fh = fourier(f).table
        pv.append(abs(np.sum(np.abs(fh) ** 2) - np.mean(np.abs(f.table) ** 2)))
    out.append(inequality("fourier_vs_recursive_u2", max(fr), runtime.ineq_tol(), "<=", 0.0, details={"functions": 100}))
    out.append(inequality("parseval", max(pv), TOL_ID, "<=", 0.0, details={"functions": 100}))
    return out


def suite_performance(fault: bool = False, visits: int = 10**8) -> list[VerificationReport]:
    with runtime.configure(workers=1):
        r = wstar_visit_rate(visits)
    return [VerificationReport("wstar_rate", r["rate"], 1e7, ">=", r["rate"] >= 1e7, details=r,
                               instance={"p": 5, "n": 4, "d": 3})]


SUITES = {
    "lemma2-equality": suite_phase_equality,
    "prop-norm": suite_prop_norm,
    "wstar-bound": suite_wstar_bound,
    "monotonicity-vn": suite_monotonicity_vn,
    "decomposition": suite_decomposition,
    "counterexample": suite_counterexample,
    "concentration": suite_concentration,
    "chevalley-warning": suite_chevalley_warning,
    "subspace": suite_subspace,
    "strategies": suite_strategies,
}
# Timing-dependent suites are kept out of "all" so "all" stays bit-reproducible.
EXTRA_SUITES = {"performance": suite_performance}


def run_suite(name: str, fault: bool = False) -> dict[str, list[VerificationReport]]:
    if name == "all":
        return {k: fn(fault) for k, fn in SUITES.items()}
    if name in SUITES:
        return {name: SUITES[name](fault)}
    if name in EXTRA_SUITES:
        return {name: EXTRA_SUITES[name](fault)}
    raise KeyError(name)


def numeric_digest(results: dict[str, list[VerificationReport]]) -> str:
    """Canonical JSON of every report; identical runs give identical bytes."""
    return json.dumps({k: [r.to_dict() for r in v] for k, v in results.items()}, sort_keys=True)
