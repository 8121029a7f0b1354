"""Counting l-term progressions x, x+y, ..., x+(l-1)y, optionally weighted or restricted in y."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import runtime
from .ffcore import DenseFunction, FieldParams
from .gowers import balanced_indicator, gowers_norm
from .polymap import PolyMap, evaluate_many, sum_of_powers
from .reports import VerificationReport, inequality, jsonable
from .variety import PointSet, level_set


@dataclass
class ApReport:
    l: int
    density: float
    count: int
    nontrivial_count: int
    normalization: str
    identity_gap: float

    def to_dict(self) -> dict:
        return jsonable(asdict(self))


def _progression_points(params: FieldParams, ys: np.ndarray, l: int) -> np.ndarray:
    """(l, B, N) indices of x + k y for k < l, all x, each y in ``ys``."""
    coords = params.coords
    cy = coords[ys]
    out = np.empty((l, ys.size, params.size), dtype=np.int64)
    for k in range(l):
        out[k] = np.mod(coords[None, :, :] + k * cy[:, None, :], params.p) @ params.weights
    return out


def _batch(params: FieldParams, l: int) -> int:
    return max(1, 2**20 // (params.size * max(l, 1)))


def gap_sums(f: DenseFunction, l: int, ys: np.ndarray) -> np.ndarray:
    """For each gap y: sum over x of f(x) f(x+y) ... f(x+(l-1)y)."""
    params = f.params
    ys = np.asarray(ys, dtype=np.int64)
    out = np.empty(ys.size, dtype=np.complex128)
    b = _batch(params, l)
    for s in range(0, ys.size, b):
        pts = _progression_points(params, ys[s : s + b], l)
        prod = np.ones(pts.shape[1:], dtype=np.complex128)
        for k in range(l):
            prod *= f.table[pts[k]]
        out[s : s + b] = prod.sum(axis=1)
    return out


def _real_if_real(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else z


def lambda_l(f: DenseFunction, l: int):
    """E_{x,y} f(x) f(x+y) ... f(x+(l-1)y)."""
    if l < 1:
        raise ValueError("progression length must be >= 1")
    N = f.params.size
    runtime.check_budget(N * N, "lambda_l")
    total = runtime.reduce_terms(lambda s, e: gap_sums(f, l, np.arange(s, e)), N)
    return _real_if_real(total / N**2)


def lambda_tilde(f: DenseFunction, g: DenseFunction, l: int):
    """E_{x,r} f(x) f(x+r) ... f(x+(l-1)r) g(r)."""
    if l < 1:
        raise ValueError("progression length must be >= 1")
    if f.params != g.params:
        raise ValueError("f and g must live on the same space")
    N = f.params.size
    runtime.check_budget(N * N, "lambda_tilde")
    total = runtime.reduce_terms(
        lambda s, e: g.table[s:e] * gap_sums(f, l, np.arange(s, e)), N
    )
    return _real_if_real(total / N**2)


def _gap_counts(A: PointSet, ys: np.ndarray, l: int) -> np.ndarray:
    """For each y, the number of x with x, x+y, ..., x+(l-1)y all in A (exact)."""
    params = A.params
    out = np.empty(ys.size, dtype=np.int64)
    b = _batch(params, l)
    for s in range(0, ys.size, b):
        pts = _progression_points(params, ys[s : s + b], l)
        ok = np.ones(pts.shape[1:], dtype=bool)
        for k in range(l):
            ok &= A.bits[pts[k]]
        out[s : s + b] = ok.sum(axis=1)
    return out


def restricted_density(A: PointSet, S: PointSet, l: int) -> ApReport:
    """Average over x in F_p^n and y in S of 1_A(x) 1_A(x+y) ... 1_A(x+(l-1)y)."""
    if S.count == 0:
        raise ValueError("restricting set S is empty")
    if A.params != S.params:
        raise ValueError("A and S must live on the same space")
    N = A.params.size
    runtime.check_budget(N * S.count, "restricted_density")
    ys = S.indices()
    chunk = max(1, 2**20 // N)
    count = runtime.count_terms(lambda s, e: _gap_counts(A, ys[s:e], l).sum(), ys.size, chunk)
    trivial = A.count if 0 in S else 0
    density = count / (N * S.count)
    tilde = lambda_tilde(DenseFunction.indicator(A.params, A.bits), DenseFunction.indicator(S.params, S.bits), l)
    gap = abs(density - N / S.count * tilde)
    return ApReport(l, density, count, count - trivial, "x in F_p^n, y in S", gap)


def decomposition_check(A: PointSet, S: PointSet, l: int, rho: float) -> VerificationReport:
    """Lambda~(1_A, 1_S) = rho Lambda(1_A) + Lambda~(1_A, 1_S - rho)."""
    f = DenseFunction.indicator(A.params, A.bits)
    one_s = DenseFunction.indicator(S.params, S.bits)
    lhs = lambda_tilde(f, one_s, l)
    main = lambda_l(f, l)
    err = lambda_tilde(f, balanced_indicator(S, rho), l)
    rhs = rho * main + err
    return VerificationReport(
        "decomposition", lhs, rhs, "==", bool(abs(lhs - rhs) <= runtime.TOL_IDENTITY),
        runtime.TOL_IDENTITY, details={"rho": rho, "lambda_l": main, "lambda_tilde_balanced": err},
        instance={"p": A.params.p, "n": A.params.n, "l": l, "A": A.count, "S": S.count},
    )


def von_neumann_check(f: DenseFunction, g: DenseFunction, l: int) -> VerificationReport:
    """|Lambda~(f, g)| <= ||g||_{U^l} for 1-bounded f, g."""
    if not (f.bounded and g.bounded):
        raise ValueError("von Neumann check needs 1-bounded f and g")
    lhs = abs(lambda_tilde(f, g, l))
    rhs = gowers_norm(g, l).value
    return inequality("von_neumann", lhs, rhs, "<=", runtime.ineq_tol(),
                      instance={"p": f.params.p, "n": f.params.n, "l": l})


def ap_list(A: PointSet, S: PointSet, l: int, limit: int | None = None) -> list[tuple[int, int]]:
    """Pairs (x, y), y in S \\ {0}, with all l terms in A; sorted by (x, y)."""
    if S.count == 0:
        raise ValueError("restricting set S is empty")
    params = A.params
    ys = S.indices()
    ys = ys[ys != 0]
    runtime.check_budget(params.size * max(ys.size, 1), "ap_list")
    pairs = []
    b = _batch(params, l)
    for s in range(0, ys.size, b):
        yb = ys[s : s + b]
        pts = _progression_points(params, yb, l)
        ok = np.ones(pts.shape[1:], dtype=bool)
        for k in range(l):
            ok &= A.bits[pts[k]]
        yi, xi = np.nonzero(ok)
        pairs.append(np.stack([xi, yb[yi]], axis=1))
    if not pairs:
        return []
    allp = np.concatenate(pairs)
    allp = allp[np.lexsort((allp[:, 1], allp[:, 0]))]
    if limit is not None:
        allp = allp[:limit]
    return [(int(x), int(y)) for x, y in allp]


def finite_difference(Q: PolyMap, x, y) -> np.ndarray:
    """sum_{k=0}^{d} (-1)^{d-k} C(d, k) Q(x + k y)."""
    d = Q.d
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    total = np.zeros(Q.R, dtype=np.int64)
    for k in range(d + 1):
        total += (-1) ** (d - k) * math.comb(d, k) * evaluate_many(Q, (x + k * y)[None, :])[0]
    return total % Q.p


def counterexample_family(p: int, n: int, d: int, samples: int = 200, seed: int = 0):
    """Q = sum x_j^d and A = {Q = 0}: every (d+1)-term progression in A has Q(gap) = 0.

    Returns (Q, A, report).  The report records the random-point identity check,
    the exhaustive identity check, and the exhaustive scan of all (x, y).
    """
    Q = sum_of_powers(n, d, p)
    A = level_set(Q, [0])
    params = Q.params
    N = params.size
    runtime.check_budget(N * N * (d + 1), "counterexample scan")
    dfact = math.factorial(d) % p

    rng = np.random.default_rng(seed)
    sample_ok = True
    for _ in range(samples):
        x, y = rng.integers(0, p, size=(2, n))
        if finite_difference(Q, x, y)[0] != dfact * int(Q(y)[0]) % p:
            sample_ok = False

    qvals = Q.values[:, 0]
    ys = np.arange(N)
    identity_failures = 0
    ap_total = 0
    bad = 0
    gaps = np.zeros(N, dtype=bool)
    b = _batch(params, d + 1)
    for s in range(0, N, b):
        yb = ys[s : s + b]
        pts = _progression_points(params, yb, d + 1)
        lhs = np.zeros(pts.shape[1:], dtype=np.int64)
        inside = np.ones(pts.shape[1:], dtype=bool)
        for k in range(d + 1):
            lhs += (-1) ** (d - k) * math.comb(d, k) * qvals[pts[k]]
            inside &= A.bits[pts[k]]
        identity_failures += int(np.count_nonzero(lhs % p != (dfact * qvals[yb] % p)[:, None]))
        nontrivial = inside & (yb != 0)[:, None]
        ap_total += int(np.count_nonzero(nontrivial))
        bad += int(np.count_nonzero(nontrivial & (qvals[yb] != 0)[:, None]))
        gaps[yb] |= nontrivial.any(axis=1)
    gap_set = PointSet(params, gaps)
    ok = sample_ok and identity_failures == 0 and bad == 0
    report = VerificationReport(
        "counterexample", bad, 0, "==", ok,
        details={
            "statement": f"every {d + 1}-term progression in A has Q(y) = 0",
            "random_identity_ok": sample_ok,
            "identity_failures": identity_failures,
            "nontrivial_progressions": ap_total,
            "progressions_with_Q(y)!=0": bad,
            "distinct_gaps": gap_set.count,
            "gaps_within_level_set": gap_set.issubset(level_set(Q, [0])),
            "density_A": A.count / N,
        },
        instance={"p": p, "n": n, "d": d},
    )
    return Q, A, report
