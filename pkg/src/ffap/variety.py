"""Exact point sets attached to a polynomial map: level sets, singular loci and W*.

W* lives in F_p^{(d-1)n}.  A tuple (h^1, ..., h^{d-1}) of point indices is
numbered ``h^1 + N h^2 + ... + N^{d-2} h^{d-1}`` with N = p^n.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import runtime
from .ffcore import FieldParams
from .polymap import PolyMap, contract, jacobian_many, phi_batch, random_polymap, rank_fp_batch
from .reports import VerificationReport

_BLOB_MAGIC = b"FFPS"


class PointSet:
    """A subset of F_p^n held as a boolean table over point indices."""

    __slots__ = ("params", "bits", "__dict__")

    def __init__(self, params: FieldParams, bits):
        b = np.array(bits, dtype=bool).reshape(-1)
        if b.size != params.size:
            raise ValueError(f"bitset has {b.size} entries, expected {params.size}")
        b.setflags(write=False)
        self.params = params
        self.bits = b

    @classmethod
    def from_indices(cls, params: FieldParams, indices) -> "PointSet":
        bits = np.zeros(params.size, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= params.size):
            raise ValueError("point index out of range")
        bits[idx] = True
        return cls(params, bits)

    @classmethod
    def full(cls, params: FieldParams) -> "PointSet":
        return cls(params, np.ones(params.size, dtype=bool))

    @classmethod
    def empty(cls, params: FieldParams) -> "PointSet":
        return cls(params, np.zeros(params.size, dtype=bool))

    @classmethod
    def random(cls, params: FieldParams, density: float, seed: int) -> "PointSet":
        """Each point included independently with probability ``density``."""
        if not 0 <= density <= 1:
            raise ValueError("density must lie in [0, 1]")
        rng = np.random.default_rng(seed)
        return cls(params, rng.random(params.size) < density)

    @cached_property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __len__(self) -> int:
        return self.count

    def __contains__(self, index) -> bool:
        return bool(self.bits[int(index)])

    def __eq__(self, other):
        return isinstance(other, PointSet) and self.params == other.params and np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"PointSet(p={self.params.p}, n={self.params.n}, count={self.count})"

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __or__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.params, self.bits | other.bits)

    def __and__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.params, self.bits & other.bits)

    def __sub__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.params, self.bits & ~other.bits)

    def issubset(self, other: "PointSet") -> bool:
        return not np.any(self.bits & ~other.bits)

    # export formats

    def to_text(self) -> str:
        head = f"# p={self.params.p} n={self.params.n} count={self.count}\n"
        return head + "".join(f"{i}\n" for i in self.indices())

    @classmethod
    def from_text(cls, text: str, params: FieldParams | None = None) -> "PointSet":
        idx = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = dict(kv.split("=", 1) for kv in line[1:].split() if "=" in kv)
                if params is None and {"p", "n"} <= fields.keys():
                    params = FieldParams(int(fields["p"]), int(fields["n"]))
                continue
            idx.append(int(line))
        if params is None:
            raise ValueError("index list has no '# p=.. n=..' header; field parameters required")
        return cls.from_indices(params, idx)

    def to_blob(self) -> bytes:
        head = _BLOB_MAGIC + struct.pack("<QQQ", self.params.p, self.params.n, self.count)
        return head + np.packbits(self.bits, bitorder="little").tobytes()

    @classmethod
    def from_blob(cls, blob: bytes) -> "PointSet":
        if blob[:4] != _BLOB_MAGIC or len(blob) < 28:
            raise ValueError("not a point-set blob")
        p, n, count = struct.unpack("<QQQ", blob[4:28])
        params = FieldParams(p, n)
        bits = np.unpackbits(np.frombuffer(blob[28:], dtype=np.uint8), bitorder="little")[: params.size]
        out = cls(params, bits)
        if out.count != count:
            raise ValueError("blob header count does not match the bitset")
        return out


def level_set(P: PolyMap, v) -> PointSet:
    """S_v = {x : P(x) = v}."""
    v = np.mod(np.asarray(v, dtype=np.int64).reshape(-1), P.p)
    if v.size != P.R:
        raise ValueError(f"level vector must have length R={P.R}")
    runtime.check_budget(P.params.size, "level_set")
    return PointSet(P.params, np.all(P.values == v, axis=1))


def level_set_sizes(P: PolyMap) -> dict[tuple[int, ...], int]:
    """|S_v| for every v in F_p^R (zero sizes included)."""
    runtime.check_budget(P.params.size, "level_set_sizes")
    codes = P.values @ (P.p ** np.arange(P.R, dtype=np.int64))
    counts = np.bincount(codes, minlength=P.p**P.R)
    out = {}
    for code, c in enumerate(counts):
        v = tuple(int(code // P.p**i % P.p) for i in range(P.R))
        out[v] = int(c)
    return out


def singular_locus(P: PolyMap) -> PointSet:
    """Points x of F_p^n where rank Jac_P(x) < R."""
    params = P.params
    runtime.check_budget(params.size, "singular_locus")
    chunk = max(1, 2**18 // (P.R * P.n))

    def part(rng):
        s, e = rng
        J = jacobian_many(P, params.coords[s:e])
        return rank_fp_batch(J, P.p) < P.R

    parts = runtime.parallel_map(part, runtime.chunk_ranges(params.size, chunk))
    return PointSet(params, np.concatenate(parts))


def dim_proxy(S: PointSet) -> float:
    """log_p |S|.  A point-count heuristic, NOT the dimension over the algebraic closure."""
    return math.log(max(S.count, 1)) / math.log(S.params.p)


# --- W* scans ---------------------------------------------------------------


def _mod_small(F: np.ndarray, p: int) -> np.ndarray:
    """Exact F mod p for float arrays holding integers of magnitude < 2^52."""
    r = F - p * np.rint(F * (1.0 / p))
    r[r < 0] += p
    return r


def _wstar_scan(P: PolyMap, want_set: bool):
    """Count (and optionally mark) tuples with rank Phi(h^1..h^{d-1}) < P.R."""
    params = P.params
    N, R, n, p = params.size, P.R, P.n, P.p
    total = N ** (P.d - 1)
    runtime.check_budget(total, "W* scan")
    if P.d == 1:
        # Phi is the constant coefficient matrix; the tuple space has one element.
        hit = int(rank_fp_batch(P.tensor[None], p)[0] < R)
        return hit, (np.array([hit], dtype=bool) if want_set else None)

    nprefix = N ** (P.d - 2)
    coordsT = params.coords.T.astype(np.float64)
    # d! is a unit mod p, so it is dropped: neither zero tests nor ranks see it.
    T = P.tensor

    def prefix_block(rng):
        s, e = rng
        idx = np.arange(s, e, dtype=np.int64)
        hs = []
        for _ in range(P.d - 2):
            hs.append(params.coords[idx % N])
            idx //= N
        M = contract(T, hs, p) if hs else T[None]
        # F[b, r, j, h] = sum_k M[b, r, k, j] * h_k  (exact in float64: n p^2 < 2^53)
        F = np.matmul(np.swapaxes(M, -1, -2).astype(np.float64), coordsT)
        if R == 1:
            # F is an exact integer; it is 0 mod p iff F == p * rint(F / p)
            hit = ~np.any(F[:, 0] != p * np.rint(F[:, 0] * (1.0 / p)), axis=1)
        else:
            F = _mod_small(F, p)
            mats = F.transpose(0, 3, 1, 2).reshape(-1, R, n)
            hit = (rank_fp_batch(mats.astype(np.int64), p) < R).reshape(e - s, N)
        return hit

    chunk = max(1, 2**21 // (R * n * N))
    ranges = runtime.chunk_ranges(nprefix, chunk)
    if not want_set:
        count = runtime.count_terms(lambda s, e: np.count_nonzero(prefix_block((s, e))), nprefix, chunk)
        return count, None
    blocks = runtime.parallel_map(prefix_block, ranges)
    mask = np.concatenate(blocks, axis=0)  # (prefix, h_last)
    mask = np.ascontiguousarray(mask.T).reshape(-1)  # index = prefix + nprefix * h_last
    return int(np.count_nonzero(mask)), mask


def _decode_tuples(mask: np.ndarray, N: int, k: int) -> np.ndarray:
    idx = np.flatnonzero(mask)
    out = np.empty((idx.size, k), dtype=np.int64)
    for s in range(k):
        out[:, s] = idx % N
        idx = idx // N
    return out


def wstar_lambda(P: PolyMap, lam, return_set: bool = False):
    """|W*(lam)|: tuples with sum_i lam_i Phi^i(h^1, ..., h^{d-1}) = 0.

    With ``return_set`` also returns a (count, d-1) array of point-index tuples
    in ascending tuple order.
    """
    lam = np.mod(np.asarray(lam, dtype=np.int64).reshape(-1), P.p)
    if lam.size != P.R:
        raise ValueError(f"lambda must have length R={P.R}")
    if not lam.any():
        raise ValueError("lambda must be nonzero")
    count, mask = _wstar_scan(P.combine(lam), return_set)
    if return_set:
        return count, _decode_tuples(mask, P.params.size, P.d - 1)
    return count


def wstar_count(P: PolyMap, return_set: bool = False):
    """|W*|: tuples where the R x n matrix Phi has rank < R."""
    count, mask = _wstar_scan(P, return_set)
    if return_set:
        return count, _decode_tuples(mask, P.params.size, P.d - 1)
    return count


def wstar_sample(P: PolyMap, samples: int, seed: int, lam=None) -> dict:
    """Monte Carlo estimate of |W*| (or |W*(lam)|) from uniform random tuples."""
    Q = P if lam is None else P.combine(lam)
    N = P.params.size
    rng = np.random.default_rng(seed)
    tuples = rng.integers(0, N, size=(samples, P.d - 1))
    hs = [P.params.coords[tuples[:, k]] for k in range(P.d - 1)]
    if P.d == 1:
        phi = np.broadcast_to(Q.tensor, (samples,) + Q.tensor.shape)
    else:
        phi = phi_batch(Q, hs)
    hit = rank_fp_batch(phi, P.p) < Q.R
    frac = float(np.mean(hit))
    se = math.sqrt(frac * (1 - frac) / samples) if samples > 1 else float("nan")
    space = N ** (P.d - 1)
    return {"samples": samples, "fraction": frac, "stderr": se, "estimate": frac * space, "estimate_stderr": se * space}


def wstar_visit_rate(visits: int = 10**8, p: int = 5, n: int = 4, d: int = 3, seed: int = 0) -> dict:
    """Throughput of the exact W*(lambda) scan in tuple visits per second."""
    import time

    P = random_polymap(p, n, d, 1, seed)
    per_scan = (p**n) ** (d - 1)
    scans = max(1, -(-visits // per_scan))
    t0 = time.perf_counter()
    for _ in range(scans):
        wstar_lambda(P, [1])
    dt = time.perf_counter() - t0
    return {"visits": scans * per_scan, "seconds": dt, "rate": scans * per_scan / dt}


def wstar_bound(P: PolyMap, K: int) -> Fraction:
    """(d-1)^n p^R p^{(d-1)n - K}, exact."""
    return (P.d - 1) ** P.n * P.p**P.R * Fraction(P.p) ** ((P.d - 1) * P.n - K)


def wstar_bound_check(P: PolyMap, K: int) -> VerificationReport:
    """|W*| <= (d-1)^n p^R p^{(d-1)n-K} for an analytically certified codimension K."""
    lhs = wstar_count(P)
    bound = wstar_bound(P, K)
    rhs = int(bound) if bound.denominator == 1 else str(bound)
    return VerificationReport(
        "wstar_bound", lhs, rhs, "<=", lhs <= bound,
        instance={"p": P.p, "n": P.n, "d": P.d, "R": P.R, "K": K, "map": P.fingerprint()},
    )


# --- Chevalley-Warning -------------------------------------------------------


def chevalley_warning_check(polys: list[PolyMap]) -> VerificationReport:
    """Count common zeros of the given forms and compare with p^{n-D}, D = total degree."""
    if not polys:
        raise ValueError("need at least one polynomial")
    p, n = polys[0].p, polys[0].n
    if any((Q.p, Q.n) != (p, n) for Q in polys):
        raise ValueError("all polynomials must live on the same F_p^n")
    runtime.check_budget(p**n * len(polys), "chevalley_warning_check")
    D = sum(Q.d * Q.R for Q in polys)
    zero = np.ones(p**n, dtype=bool)
    for Q in polys:
        zero &= ~np.any(Q.values != 0, axis=1)
    count = int(np.count_nonzero(zero))
    inst = {"p": p, "n": n, "D": D, "degrees": [Q.d for Q in polys for _ in range(Q.R)]}
    if D >= n:
        return VerificationReport(
            "chevalley_warning", count, None, ">=", None,
            details={"note": "precondition D < n not met; nothing asserted"}, instance=inst,
        )
    rhs = p ** (n - D)
    return VerificationReport("chevalley_warning", count, rhs, ">=", count >= rhs, instance=inst)


# --- main condition ----------------------------------------------------------


@dataclass
class ConditionReport:
    p: int
    n: int
    d: int
    R: int
    K: int
    eps: float
    alpha: float
    beta: Fraction = field(repr=False)
    gamma: Fraction = field(repr=False)
    slack: float
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "p": self.p, "n": self.n, "d": self.d, "R": self.R, "K": self.K, "eps": self.eps,
            "alpha": self.alpha, "beta": str(self.beta), "gamma": str(self.gamma),
            "slack": round(self.slack, 12), "satisfied": self.satisfied,
        }


def main_condition(p: int, n: int, d: int, R: int, K: int, eps: float) -> ConditionReport:
    """alpha = log_p d, beta = K/n, gamma = R/n and slack = beta - alpha - (2^d + 1) gamma."""
    if min(p, n, d, R) <= 0 or K < 0:
        raise ValueError("p, n, d, R must be positive and K non-negative")
    if K > n or R > n:
        raise ValueError("need K <= n and R <= n")
    if d >= p:
        raise ValueError(f"degree d={d} must be < p={p}")
    beta = Fraction(K, n)
    gamma = Fraction(R, n)
    alpha = math.log(d) / math.log(p)
    # exact rational part first, the single logarithm last
    slack = float(beta - (2**d + 1) * gamma) - alpha
    return ConditionReport(p, n, d, R, K, eps, alpha, beta, gamma, slack, slack >= eps)


def generic_singular_experiment(p: int, n: int, d: int, R: int, trials: int, seed: int) -> list[dict]:
    """Sample random maps and record the point count and dim_proxy of each singular locus."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        s = int(rng.integers(0, 2**63 - 1))
        S = singular_locus(random_polymap(p, n, d, R, s))
        out.append({"seed": s, "size": S.count, "dim_proxy": dim_proxy(S), "generic_bound": 2 * R - 2})
    return out
