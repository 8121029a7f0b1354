"""Homogeneous polynomial maps F_p^n -> F_p^R stored as symmetric coefficient tensors.

A degree-d form is kept as ``a[t]`` for sorted index tuples ``t = (j_1 <= ... <= j_d)``,
meaning ``P(x) = sum over ALL ordered d-tuples of a[sorted(tuple)] * x_{j_1} ... x_{j_d}``.
A sorted tuple therefore stands for ``multiplicity(t) = d! / prod(c!)`` ordered tuples.
Indices are 0-based throughout.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .ffcore import FieldParams, is_prime


def multiplicity(t: Sequence[int]) -> int:
    """Number of distinct orderings of the multiset ``t``."""
    out = math.factorial(len(t))
    for c in Counter(t).values():
        out //= math.factorial(c)
    return out


def _exponents_to_tuple(exps: Sequence[int]) -> tuple[int, ...]:
    return tuple(j for j, e in enumerate(exps) for _ in range(e))


def _tuple_to_exponents(t: Sequence[int], n: int) -> tuple[int, ...]:
    e = [0] * n
    for j in t:
        e[j] += 1
    return tuple(e)


def _check_pd(p: int, d: int) -> None:
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if d < 1:
        raise ValueError("degree must be >= 1")
    if d >= p:
        raise ValueError(f"degree d={d} must be < p={p} so that d! is invertible")


@dataclass(frozen=True)
class SymmetricForm:
    """One homogeneous form.  ``items`` holds (sorted tuple, residue) pairs, nonzero only."""

    p: int
    n: int
    d: int
    items: tuple[tuple[tuple[int, ...], int], ...]

    @classmethod
    def from_dict(cls, p: int, n: int, d: int, coeffs: dict) -> "SymmetricForm":
        _check_pd(p, d)
        acc: dict[tuple[int, ...], int] = {}
        for t, a in coeffs.items():
            t = tuple(sorted(int(j) for j in t))
            if len(t) != d:
                raise ValueError(f"coefficient index {t} does not have length d={d}")
            if t and (t[0] < 0 or t[-1] >= n):
                raise ValueError(f"coefficient index {t} out of range for n={n}")
            acc[t] = (acc.get(t, 0) + int(a)) % p
        return cls(p, n, d, tuple(sorted((t, a) for t, a in acc.items() if a)))

    @cached_property
    def coeffs(self) -> dict[tuple[int, ...], int]:
        return dict(self.items)

    def coeff(self, index: Sequence[int]) -> int:
        """a_{j_1...j_d}; any ordering of the indices gives the same value."""
        return self.coeffs.get(tuple(sorted(index)), 0)

    @cached_property
    def dense(self) -> np.ndarray:
        """Full symmetric tensor of shape (n,)*d."""
        T = np.zeros((self.n,) * self.d, dtype=np.int64)
        for t, a in self.items:
            for perm in set(itertools.permutations(t)):
                T[perm] = a
        T.setflags(write=False)
        return T

    def monomials(self) -> list[tuple[tuple[int, ...], int]]:
        """(exponent vector, coefficient) pairs of the ordinary monomial expansion."""
        out = []
        for t, a in self.items:
            c = a * multiplicity(t) % self.p
            if c:
                out.append((_tuple_to_exponents(t, self.n), c))
        return out


@dataclass(frozen=True)
class PolyMap:
    """P = (P_1, ..., P_R), all forms of degree d over F_p^n."""

    p: int
    n: int
    d: int
    forms: tuple[SymmetricForm, ...]

    def __post_init__(self):
        if len(self.forms) < 1:
            raise ValueError("a polynomial map needs R >= 1 forms")
        for f in self.forms:
            if (f.p, f.n, f.d) != (self.p, self.n, self.d):
                raise ValueError("all forms must share (p, n, d)")

    @property
    def R(self) -> int:
        return len(self.forms)

    @cached_property
    def params(self) -> FieldParams:
        return FieldParams(self.p, self.n)

    @cached_property
    def tensor(self) -> np.ndarray:
        """Stacked symmetric tensors, shape (R,) + (n,)*d."""
        T = np.stack([f.dense for f in self.forms])
        T.setflags(write=False)
        return T

    def monomials(self) -> list[tuple[int, tuple[int, ...], int]]:
        return [(i, e, c) for i, f in enumerate(self.forms) for e, c in f.monomials()]

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    @cached_property
    def values(self) -> np.ndarray:
        """(p^n, R) table of P at every point, in index order."""
        v = evaluate_many(self, self.params.coords)
        v.setflags(write=False)
        return v

    def combine(self, alpha: Sequence[int]) -> "PolyMap":
        """The single form alpha . P = sum_i alpha_i P_i."""
        alpha = [int(a) % self.p for a in alpha]
        if len(alpha) != self.R:
            raise ValueError(f"alpha must have length R={self.R}")
        acc: dict[tuple[int, ...], int] = {}
        for a, f in zip(alpha, self.forms):
            for t, c in f.items:
                acc[t] = acc.get(t, 0) + a * c
        return PolyMap(self.p, self.n, self.d, (SymmetricForm.from_dict(self.p, self.n, self.d, acc),))

    def fingerprint(self) -> str:
        return hashlib.sha256(serialize(self)).hexdigest()[:16]


def from_monomials(p: int, n: int, d: int, R: int, terms: Iterable) -> PolyMap:
    """Build a map from ``(row, exponent vector, coefficient)`` terms.

    Each monomial ``c x^e`` is spread evenly over the orderings of its index
    multiset: ``a_t = c * multiplicity(t)^{-1}``, which is possible because d < p.
    """
    _check_pd(p, d)
    rows: list[dict] = [{} for _ in range(R)]
    for row, exps, c in terms:
        if not 0 <= row < R:
            raise ValueError(f"row {row} out of range for R={R}")
        exps = tuple(int(e) for e in exps)
        if len(exps) != n or any(e < 0 for e in exps):
            raise ValueError(f"exponent vector {exps} invalid for n={n}")
        if sum(exps) != d:
            raise ValueError(f"term {exps} is not homogeneous of degree {d}")
        t = _exponents_to_tuple(exps)
        a = int(c) * pow(multiplicity(t), -1, p)
        rows[row][t] = rows[row].get(t, 0) + a
    return PolyMap(p, n, d, tuple(SymmetricForm.from_dict(p, n, d, r) for r in rows))


def evaluate_many(P: PolyMap, X: np.ndarray) -> np.ndarray:
    """P at each row of X; returns (m, R) residues."""
    X = np.mod(np.asarray(X, dtype=np.int64), P.p)
    if X.ndim != 2 or X.shape[1] != P.n:
        raise ValueError(f"points must have {P.n} coordinates")
    out = np.zeros((X.shape[0], P.R), dtype=np.int64)
    for i, f in enumerate(P.forms):
        for t, a in f.items:
            col = np.full(X.shape[0], a * multiplicity(t) % P.p, dtype=np.int64)
            for j in t:
                col = col * X[:, j] % P.p
            out[:, i] += col
    return out % P.p


def evaluate(P: PolyMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (P.n,):
        raise ValueError(f"dimension mismatch: point has shape {x.shape}, expected ({P.n},)")
    return evaluate_many(P, x[None, :])[0]


def diff_eval(P: PolyMap, h, x) -> np.ndarray:
    """D_h P(x) = P(x + h) - P(x)."""
    h = np.asarray(h, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    return (evaluate(P, x + h) - evaluate(P, x)) % P.p


def iterated_diff_eval(P: PolyMap, hs: Sequence, x) -> np.ndarray:
    """D_{h^1} ... D_{h^k} P(x), expanded as an alternating sum over subsets of the h's."""
    x = np.asarray(x, dtype=np.int64)
    total = np.zeros(P.R, dtype=np.int64)
    k = len(hs)
    for omega in itertools.product((0, 1), repeat=k):
        pt = x + sum((np.asarray(h, dtype=np.int64) for h, w in zip(hs, omega) if w), np.zeros(P.n, dtype=np.int64))
        sign = -1 if (k - sum(omega)) % 2 else 1
        total += sign * evaluate(P, pt)
    return total % P.p


def contract(T: np.ndarray, hs: Sequence[np.ndarray], p: int) -> np.ndarray:
    """Contract the first len(hs) form slots of stacked tensors T (R, n, ..., n).

    Each ``h`` is a batch (B, n) of vectors; returns (B, R, n, ...) reduced mod p.
    With no vectors the result is T with a batch axis of size 1.
    """
    if not hs:
        return np.asarray(T)[None]
    h0 = np.asarray(hs[0], dtype=np.int64)
    cur = np.einsum("rj...,bj->br...", T, h0) % p
    for h in hs[1:]:
        cur = np.einsum("brj...,bj->br...", cur, np.asarray(h, dtype=np.int64)) % p
    return cur


def phi_batch(P: PolyMap, hs: Sequence[np.ndarray]) -> np.ndarray:
    """Phi(h^1, ..., h^{d-1}) for batches of tuples; returns (B, R, n).

    Phi^i_j = d! sum a^i_{j_1 ... j_{d-1} j} h^1_{j_1} ... h^{d-1}_{j_{d-1}}.
    """
    if len(hs) != P.d - 1:
        raise ValueError(f"expected {P.d - 1} difference vectors, got {len(hs)}")
    out = contract(P.tensor, [np.atleast_2d(h) for h in hs], P.p)
    return out * (math.factorial(P.d) % P.p) % P.p


def phi_matrix(P: PolyMap, hs: Sequence) -> np.ndarray:
    """The R x n matrix Phi(h^1, ..., h^{d-1}) over F_p."""
    if len(hs) != P.d - 1:
        raise ValueError(f"expected {P.d - 1} difference vectors, got {len(hs)}")
    for h in hs:
        if np.shape(h) != (P.n,):
            raise ValueError(f"difference vectors must have length {P.n}")
    return phi_batch(P, [np.asarray(h, dtype=np.int64)[None, :] for h in hs])[0]


def jacobian_many(P: PolyMap, X: np.ndarray) -> np.ndarray:
    """Formal Jacobians at each row of X, from the monomial expansion; (m, R, n)."""
    X = np.mod(np.asarray(X, dtype=np.int64), P.p)
    out = np.zeros((X.shape[0], P.R, P.n), dtype=np.int64)
    for i, exps, c in P.monomials():
        for j in range(P.n):
            if exps[j] == 0:
                continue
            col = np.full(X.shape[0], c * exps[j] % P.p, dtype=np.int64)
            for k, e in enumerate(exps):
                for _ in range(e - (k == j)):
                    col = col * X[:, k] % P.p
            out[:, i, j] += col
    return out % P.p


def jacobian(P: PolyMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (P.n,):
        raise ValueError(f"dimension mismatch: point has shape {x.shape}, expected ({P.n},)")
    return jacobian_many(P, x[None, :])[0]


def rank_fp(M, p: int) -> int:
    """Rank of a matrix over F_p by Gaussian elimination."""
    A = [[int(v) % p for v in row] for row in np.atleast_2d(np.asarray(M, dtype=np.int64))]
    if not A or not A[0]:
        return 0
    rows, cols = len(A), len(A[0])
    rank = 0
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if A[r][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], p - 2, p)
        A[rank] = [v * inv % p for v in A[rank]]
        for r in range(rows):
            if r != rank and A[r][c]:
                f = A[r][c]
                A[r] = [(v - f * w) % p for v, w in zip(A[r], A[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


def rank_fp_batch(M: np.ndarray, p: int) -> np.ndarray:
    """Ranks of a batch of matrices (B, rows, cols) over F_p."""
    A = np.mod(np.array(M, dtype=np.int64), p)
    B, rows, cols = A.shape
    inv = np.array([pow(a, p - 2, p) if a else 0 for a in range(p)], dtype=np.int64)
    rank = np.zeros(B, dtype=np.int64)
    ar = np.arange(rows)
    for c in range(cols):
        cand = (A[:, :, c] != 0) & (ar[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = np.nonzero(has)[0]
        piv = cand[b].argmax(axis=1)
        r = rank[b]
        top = A[b, r].copy()
        A[b, r] = A[b, piv]
        A[b, piv] = top
        prow = A[b, r] * inv[A[b, r, c]][:, None] % p
        A[b, r] = prow
        factors = A[b, :, c].copy()
        factors[np.arange(b.size), r] = 0
        A[b] = (A[b] - factors[:, :, None] * prow[:, None, :]) % p
        rank[b] += 1
    return rank


def diagonal_map(A, d: int, p: int) -> PolyMap:
    """P_i(x) = sum_j A[i, j] x_j^d."""
    _check_pd(p, d)
    A = np.mod(np.atleast_2d(np.asarray(A, dtype=np.int64)), p)
    R, n = A.shape
    forms = tuple(
        SymmetricForm.from_dict(p, n, d, {(j,) * d: int(A[i, j]) for j in range(n) if A[i, j]})
        for i in range(R)
    )
    return PolyMap(p, n, d, forms)


def is_nondegenerate(A, p: int) -> bool:
    """True iff every R x ceil(n/2) column submatrix of A has rank R."""
    A = np.mod(np.atleast_2d(np.asarray(A, dtype=np.int64)), p)
    R, n = A.shape
    m = -(-n // 2)
    if R > m:
        return False
    return all(rank_fp(A[:, list(cols)], p) == R for cols in itertools.combinations(range(n), m))


def random_diagonal(R: int, n: int, p: int, seed: int) -> np.ndarray:
    """R x n matrix whose columns are independent uniform vectors of F_p^R."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, p, size=(R, n), dtype=np.int64)


def nondegenerate_fraction(R: int, n: int, p: int, trials: int, seed: int) -> dict:
    """Sampling experiment: fraction of random diagonal matrices that are non-degenerate.

    Also returns the asymptotic lower bound ``1 - p^{-(g0 - g) n}`` with
    ``g0 = 1/2 - log 2 / log 5`` and ``g = R/n`` (meaningful only when g < g0).
    """
    rng = np.random.default_rng(seed)
    hits = sum(is_nondegenerate(rng.integers(0, p, size=(R, n)), p) for _ in range(trials))
    g0 = 0.5 - math.log(2) / math.log(5)
    g = R / n
    return {
        "trials": trials,
        "fraction": hits / trials,
        "gamma": g,
        "gamma0": g0,
        "asymptotic_lower_bound": 1 - p ** (-(g0 - g) * n) if g < g0 else None,
    }


def sum_of_powers(n: int, d: int, p: int) -> PolyMap:
    """Q(x) = x_1^d + ... + x_n^d (R = 1)."""
    return diagonal_map(np.ones((1, n), dtype=np.int64), d, p)


def random_polymap(p: int, n: int, d: int, R: int, seed: int) -> PolyMap:
    """Uniformly random symmetric coefficients on every sorted index tuple."""
    _check_pd(p, d)
    rng = np.random.default_rng(seed)
    tuples = list(itertools.combinations_with_replacement(range(n), d))
    forms = []
    for _ in range(R):
        vals = rng.integers(0, p, size=len(tuples))
        forms.append(SymmetricForm.from_dict(p, n, d, dict(zip(tuples, vals.tolist()))))
    return PolyMap(p, n, d, tuple(forms))


def serialize(P: PolyMap) -> bytes:
    """Canonical JSON document; terms sorted by (row, exponents)."""
    terms = sorted(
        ({"row": i, "exponents": list(e), "coeff": int(c)} for i, e, c in P.monomials()),
        key=lambda t: (t["row"], t["exponents"]),
    )
    doc = {"p": P.p, "n": P.n, "d": P.d, "R": P.R, "terms": terms}
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()


def parse(data: bytes | str) -> PolyMap:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed polynomial map document: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("polynomial map document must be an object")
    missing = {"p", "n", "d", "R", "terms"} - doc.keys()
    if missing:
        raise ValueError(f"polynomial map document missing fields: {sorted(missing)}")
    p, n, d, R = (doc[k] for k in ("p", "n", "d", "R"))
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (p, n, d, R)):
        raise ValueError("p, n, d, R must be integers")
    if n < 1 or R < 1:
        raise ValueError("n and R must be >= 1")
    terms = []
    for t in doc["terms"]:
        try:
            terms.append((int(t["row"]), [int(e) for e in t["exponents"]], int(t["coeff"]) % p))
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"malformed term {t!r}") from None
    return from_monomials(p, n, d, R, terms)
