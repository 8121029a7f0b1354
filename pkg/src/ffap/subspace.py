"""Linear subspaces inside the zero set of a homogeneous map, and progressions in their cosets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import runtime
from .ffcore import FieldParams
from .polymap import PolyMap, contract
from .reports import VerificationReport
from .variety import PointSet, level_set


def rref(M, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p with zero rows removed; returns (rows, pivot columns)."""
    A = np.mod(np.atleast_2d(np.array(M, dtype=np.int64)), p)
    if A.size == 0:
        return A.reshape(0, A.shape[-1] if A.ndim == 2 else 0), []
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * pow(int(A[r, c]), p - 2, p) % p
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = (A[i] - A[i, c] * A[r]) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


class LinearSubspace:
    """Span of an echelonized basis inside F_p^n."""

    def __init__(self, params: FieldParams, vectors=()):
        vecs = np.asarray(list(vectors), dtype=np.int64).reshape(-1, params.n)
        self.params = params
        self.basis, self.pivots = rref(vecs, params.p) if len(vecs) else (np.zeros((0, params.n), dtype=np.int64), [])
        self.basis.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __repr__(self):
        return f"LinearSubspace(p={self.params.p}, n={self.params.n}, basis={self.basis.tolist()})"

    def __eq__(self, other):
        return isinstance(other, LinearSubspace) and self.params == other.params and np.array_equal(self.basis, other.basis)

    def extend(self, vector) -> "LinearSubspace":
        return LinearSubspace(self.params, np.vstack([self.basis, np.asarray(vector, dtype=np.int64)[None]]))

    @cached_property
    def _points(self) -> np.ndarray:
        p, m = self.params.p, self.dim
        if m == 0:
            return np.zeros(1, dtype=np.int64)
        coeffs = np.array(list(itertools.product(range(p), repeat=m)), dtype=np.int64)
        pts = coeffs @ self.basis % p
        return np.sort(pts @ self.params.weights)

    def enumerate(self) -> np.ndarray:
        """Indices of all p^m points, ascending."""
        return self._points

    def reduce(self, coords: np.ndarray) -> np.ndarray:
        """Canonical representative of x + M: zero out the pivot coordinates."""
        x = np.mod(np.array(coords, dtype=np.int64), self.params.p)
        for row, c in zip(self.basis, self.pivots):
            x = (x - x[..., c : c + 1] * row) % self.params.p
        return x

    def contains(self, index: int) -> bool:
        return not self.reduce(self.params.decode(index)).any()

    def export(self) -> str:
        """Basis rows as residue vectors, one per line."""
        return "".join(" ".join(str(int(v)) for v in row) + "\n" for row in self.basis)


def _zero_mask(P: PolyMap) -> np.ndarray:
    return ~np.any(P.values != 0, axis=1)


def _check_inside(P: PolyMap, M: LinearSubspace, zero: np.ndarray) -> None:
    if not zero[M.enumerate()].all():
        raise ValueError("subspace is not contained in the zero set P^{-1}(0)")


def extension_candidates_multilinear(P: PolyMap, M: LinearSubspace) -> PointSet:
    """h with Q_i(h^(k), h_{i_{k+1}}, ..., h_{i_d}) = 0 for all k >= 1, i and basis multisets."""
    params = P.params
    runtime.check_budget(params.size, "extension_candidates")
    ok = np.ones(params.size, dtype=bool)
    basis = M.basis
    for k in range(1, P.d + 1):
        for ms in itertools.combinations_with_replacement(range(M.dim), P.d - k):
            Tk = contract(P.tensor, [basis[i][None, :] for i in ms], P.p)[0] if ms else P.tensor
            vals = contract(Tk, [params.coords] * k, P.p)  # (N, R)
            ok &= ~np.any(vals != 0, axis=1)
    return PointSet(params, ok)


def extension_candidates_direct(P: PolyMap, M: LinearSubspace) -> PointSet:
    """h with M + F_p h contained in P^{-1}(0), checked point by point."""
    params = P.params
    p = params.p
    zero = _zero_mask(P)
    mc = params.coords[M.enumerate()]
    ts = np.arange(p)
    per = mc.shape[0] * p
    runtime.check_budget(params.size * per, "direct extension test")
    ok = np.empty(params.size, dtype=bool)
    chunk = max(1, 2**20 // per)
    for s in range(0, params.size, chunk):
        hc = params.coords[s : s + chunk]
        pts = np.mod(mc[None, :, None, :] + ts[None, None, :, None] * hc[:, None, None, :], p) @ params.weights
        ok[s : s + chunk] = zero[pts].reshape(hc.shape[0], -1).all(axis=1)
    return PointSet(params, ok)


def extension_candidates(P: PolyMap, M: LinearSubspace, cross_check: bool = True) -> PointSet:
    """Vectors h such that M + F_p h stays inside P^{-1}(0).

    The multilinear conditions are the primary test; with ``cross_check`` the
    direct span test is also run and the two must agree.
    """
    _check_inside(P, M, _zero_mask(P))
    cand = extension_candidates_multilinear(P, M)
    if cross_check:
        direct = extension_candidates_direct(P, M)
        if cand != direct:
            raise RuntimeError("multilinear and direct extension tests disagree")
    return cand


def greedy_max_subspace(P: PolyMap, seed: int | None = None, cross_check: bool = True) -> LinearSubspace:
    """Grow M inside P^{-1}(0) one vector at a time until no extension exists.

    The new vector is the lowest-index candidate outside M, or a seeded random
    one when ``seed`` is given.  The result is maximal, not necessarily maximum.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    M = LinearSubspace(P.params)
    while True:
        cand = extension_candidates(P, M, cross_check)
        outside = cand.bits.copy()
        outside[M.enumerate()] = False
        idx = np.flatnonzero(outside)
        if idx.size == 0:
            return M
        pick = idx[0] if rng is None else rng.choice(idx)
        M = M.extend(P.params.decode(pick))


def maximality_certificate(P: PolyMap, M: LinearSubspace) -> dict:
    zero = _zero_mask(P)
    sound = bool(zero[M.enumerate()].all())
    cand = extension_candidates(P, M) if sound else None
    extra = int(np.count_nonzero(cand.bits & ~np.isin(np.arange(P.params.size), M.enumerate()))) if sound else None
    return {"dim": M.dim, "points_checked": int(M.enumerate().size), "sound": sound,
            "extensions_outside_M": extra, "maximal": sound and extra == 0}


def _multisets(m: int, r: int) -> int:
    return 1 if r == 0 else math.comb(m + r - 1, r)


def subspace_bound_report(P: PolyMap, M: LinearSubspace) -> VerificationReport:
    """Report dim M against (n/R)^{1/d} and the extension degree budget (not asserted)."""
    m, d, R = M.dim, P.d, P.R
    trend = (P.n / R) ** (1.0 / d)
    # R * (number of basis multisets of size d-k) equations of degree k, for each k
    budget = sum(k * R * _multisets(m, d - k) for k in range(1, d + 1))
    literal = sum(k * R * math.comb(m, k) for k in range(1, d + 1))
    ratio = m / trend
    return VerificationReport(
        "subspace_bound", m, trend, "report", None,
        details={"ratio": ratio, "below_trend": ratio < 0.5, "degree_budget": budget,
                 "degree_budget_binomial_m_k": literal,
                 "chevalley_warning_guarantee_exceeds_M": P.n - budget > m},
        instance={"p": P.p, "n": P.n, "d": d, "R": R, "map": P.fingerprint()},
    )


def dense_translate(A: PointSet, M: LinearSubspace) -> tuple[int, float]:
    """Coset x + M maximizing |A cap (x + M)| / |M|; representative = lowest index in the coset."""
    params = A.params
    keys = M.reduce(params.coords) @ params.weights
    size = params.size
    counts = np.bincount(keys, weights=A.bits.astype(np.float64), minlength=size)
    rep = np.full(size, size, dtype=np.int64)
    np.minimum.at(rep, keys, np.arange(size))
    present = rep < size
    best = counts[present].max()
    winners = rep[present][counts[present] == best]
    return int(winners.min()), float(best) / params.p**M.dim


@dataclass
class ApSearch:
    status: str  # "found", "none", "subspace_too_small"
    x: int | None = None
    y: int | None = None

    @property
    def found(self) -> bool:
        return self.status == "found"


def ap_in_coset(A: PointSet, M: LinearSubspace, x0: int, l: int) -> ApSearch:
    """First progression of length l inside A cap (x0 + M) with gap in M \\ {0}.

    Scan order: x = x0 + m with m ascending by index, then y ascending by index.
    """
    params = A.params
    if l > params.p:
        raise ValueError(f"progression length l={l} exceeds p={params.p}")
    if M.dim == 0:
        return ApSearch("subspace_too_small")
    mpts = M.enumerate()
    runtime.check_budget(mpts.size**2 * l, "ap_in_coset")
    mc = params.coords[mpts]
    xc = np.mod(params.decode(x0)[None, :] + mc, params.p)
    yc = mc[1:]  # index 0 is the origin
    ok = np.ones((xc.shape[0], yc.shape[0]), dtype=bool)
    for k in range(l):
        pts = np.mod(xc[:, None, :] + k * yc[None, :, :], params.p) @ params.weights
        ok &= A.bits[pts]
    if not ok.any():
        return ApSearch("none")
    i, j = np.unravel_index(np.argmax(ok), ok.shape)
    return ApSearch("found", int(xc[i] @ params.weights), int(yc[j] @ params.weights))


def restricted_ap_pipeline(P: PolyMap, A: PointSet, l: int, seed: int | None = None) -> dict:
    """Subspace in P^{-1}(0), densest coset, progression search, then independent re-verification."""
    M = greedy_max_subspace(P, seed)
    rep, dens = dense_translate(A, M)
    res = ap_in_coset(A, M, rep, l)
    out = {"dim": M.dim, "coset_rep": rep, "coset_density": dens, "global_density": A.count / A.params.size,
           "status": res.status, "x": res.x, "y": res.y, "verified": None}
    if res.found:
        params = A.params
        xs = [int(params.scale_add(res.x, res.y, k)) for k in range(l)]
        out["terms"] = xs
        out["verified"] = (
            all(t in A for t in xs)
            and res.y != 0
            and not P(params.decode(res.y)).any()
        )
    return out
