"""Gowers uniformity norms on F_p^n.

Strategies:

* ``recursive``     E_{h_1..h_{l-1}} |E_x Delta_{h_1..h_{l-1}} f(x)|^2, cost p^{ln}.
* ``definitional``  the full (l+1)-fold cube average, cost p^{(l+1)n}; an oracle for tiny cases.
* ``fourier``       l = 2 only: sum over frequencies of |f^|^4.
* ``closed_form``   phase functions e(alpha . P): |W*(alpha)| / p^{(d-1)n}.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from . import runtime
from .ffcore import DenseFunction, FieldParams, char_table, fourier
from .polymap import PolyMap
from .reports import VerificationReport, inequality, jsonable
from .variety import PointSet, level_set, wstar_lambda

IMAG_LIMIT = 1e-10
STRATEGIES = ("recursive", "definitional", "fourier", "closed_form")


class GowersError(ArithmeticError):
    """Raw power came out with a large imaginary or negative part."""


@dataclass
class GowersReport:
    l: int
    value: float
    raw_power: float
    strategy: str
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable(asdict(self))


def _finish(raw: complex, l: int, strategy: str, meta: dict) -> GowersReport:
    raw = complex(raw)
    if abs(raw.imag) > IMAG_LIMIT or raw.real < -IMAG_LIMIT:
        raise GowersError(
            f"U^{l} raw power {raw!r} ({strategy}) is not a non-negative real; meta={meta}"
        )
    r = max(raw.real, 0.0)
    return GowersReport(l, r ** (1.0 / 2**l), r, strategy, meta)


def _meta(f: DenseFunction, **extra) -> dict:
    return {"p": f.params.p, "n": f.params.n, **extra}


_ADD_TABLE_MAX = 2048


def _add_table(params: FieldParams) -> np.ndarray | None:
    if params.size > _ADD_TABLE_MAX:
        return None
    idx = np.arange(params.size)
    return params.add(idx[:, None], idx[None, :])


def _recursive_raw(f: DenseFunction, l: int):
    params = f.params
    N = params.size
    k = l - 1
    runtime.check_budget(N**l, f"U^{l} recursive")
    table = f.table
    add = _add_table(params)
    xs = np.arange(N)
    batch = max(1, 2**20 // N)

    def terms(s, e):
        out = np.empty(e - s, dtype=np.float64)
        for bs in range(s, e, batch):
            be = min(bs + batch, e)
            t = np.arange(bs, be, dtype=np.int64)
            D = np.broadcast_to(table, (be - bs, N))
            rows = np.arange(be - bs)[:, None]
            for _ in range(k):
                h = t % N
                t //= N
                shift = add[h] if add is not None else params.add(h[:, None], xs[None, :])
                D = D[rows, shift] * np.conj(D)
            m = D.sum(axis=1) / N
            out[bs - s : be - s] = m.real**2 + m.imag**2
        return out

    return runtime.reduce_terms(terms, N**k) / N**k


def _definitional_raw(f: DenseFunction, l: int):
    params = f.params
    N = params.size
    runtime.check_budget(N ** (l + 1), f"U^{l} definitional")
    table = f.table
    add = _add_table(params)
    xs = np.arange(N)
    vertices = list(itertools.product((0, 1), repeat=l))
    conj = [(l - sum(om)) % 2 == 1 for om in vertices]
    batch = max(1, 2**18 // N)

    def plus(a, b):
        return add[a, b] if add is not None else params.add(a, b)

    def terms(s, e):
        out = np.empty(e - s, dtype=np.complex128)
        for bs in range(s, e, batch):
            be = min(bs + batch, e)
            t = np.arange(bs, be, dtype=np.int64)
            hs = []
            for _ in range(l):
                hs.append(t % N)
                t //= N
            prod = np.ones((be - bs, N), dtype=np.complex128)
            for om, cj in zip(vertices, conj):
                shift = np.zeros(be - bs, dtype=np.int64)
                for bit, h in zip(om, hs):
                    if bit:
                        shift = plus(shift, h)
                vals = table[add[shift] if add is not None else params.add(shift[:, None], xs[None, :])]
                prod *= np.conj(vals) if cj else vals
            out[bs - s : be - s] = prod.sum(axis=1)
        return out

    return runtime.reduce_terms(terms, N**l) / N ** (l + 1)


def gowers_norm(f: DenseFunction, l: int, strategy: str = "recursive") -> GowersReport:
    """||f||_{U^l} with its 2^l-th power."""
    if l < 1:
        raise ValueError("Gowers norm order l must be >= 1")
    if strategy == "recursive":
        raw = _recursive_raw(f, l)
    elif strategy == "definitional":
        raw = _definitional_raw(f, l)
    elif strategy == "fourier":
        if l != 2:
            raise ValueError("the fourier strategy only computes U^2")
        return gowers_u2_fourier(f)
    else:
        raise ValueError(f"unknown strategy {strategy!r} (closed_form needs phase_norm_closed_form)")
    return _finish(raw, l, strategy, _meta(f))


def gowers_u2_fourier(f: DenseFunction) -> GowersReport:
    fh = fourier(f).table
    raw = runtime.tree_sum(np.abs(fh) ** 4)
    return _finish(raw, 2, "fourier", _meta(f))


def phase_function(P: PolyMap, alpha) -> DenseFunction:
    """x -> e(alpha . P(x))."""
    alpha = np.mod(np.asarray(alpha, dtype=np.int64).reshape(-1), P.p)
    if alpha.size != P.R:
        raise ValueError(f"alpha must have length R={P.R}")
    phases = P.values @ alpha % P.p
    return DenseFunction(P.params, char_table(P.p)[phases], bounded=True)


def phase_norm_closed_form(P: PolyMap, alpha) -> GowersReport:
    """||e(alpha . P)||_{U^d}: only tuples in W*(alpha) survive the last average."""
    count = wstar_lambda(P, alpha)
    raw = count / P.params.size ** (P.d - 1)
    meta = {"p": P.p, "n": P.n, "d": P.d, "R": P.R, "map": P.fingerprint(),
            "alpha": [int(a) for a in np.mod(alpha, P.p)], "wstar_lambda": count}
    return _finish(raw, P.d, "closed_form", meta)


def balanced_indicator(S: PointSet, rho: float) -> DenseFunction:
    """1_S - rho."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    return DenseFunction(S.params, S.bits.astype(np.float64) - rho, bounded=True)


def prop_norm_bound(P: PolyMap, K: int) -> float:
    """(d-1)^{n/2^d} p^{(R-K)/2^d}."""
    s = 2.0 ** -P.d
    return (P.d - 1) ** (s * P.n) * float(P.p) ** (s * (P.R - K))


def nonzero_vectors(p: int, R: int):
    for a in itertools.product(range(p), repeat=R):
        if any(a):
            yield a


def prop_norm_check(P: PolyMap, v, K_analytic: int, strategy: str | None = None) -> VerificationReport:
    """||1_{S_v} - p^{-R}||_{U^d} against the codimension bound for a certified K."""
    S = level_set(P, v)
    g = balanced_indicator(S, float(P.p) ** -P.R)
    if strategy is None:
        strategy = "fourier" if P.d == 2 else "recursive"
    rep = gowers_norm(g, P.d, strategy)
    triangle = float(P.p) ** -P.R * sum(
        phase_norm_closed_form(P, a).value for a in nonzero_vectors(P.p, P.R)
    )
    rhs = prop_norm_bound(P, K_analytic)
    return inequality(
        "prop_norm", rep.value, rhs, "<=", runtime.ineq_tol(),
        details={"raw_power": rep.raw_power, "strategy": rep.strategy, "triangle_route": triangle,
                 "level_size": S.count},
        instance={"p": P.p, "n": P.n, "d": P.d, "R": P.R, "K": K_analytic,
                  "v": [int(x) for x in np.ravel(v)], "map": P.fingerprint()},
    )


def monotonicity_check(f: DenseFunction, l: int) -> VerificationReport:
    """||f||_{U^{l-1}} <= ||f||_{U^l}."""
    if l < 2:
        raise ValueError("monotonicity needs l >= 2")
    lo = gowers_norm(f, l - 1)
    hi = gowers_norm(f, l)
    return inequality("monotonicity", lo.value, hi.value, "<=", runtime.ineq_tol(),
                      instance=_meta(f, l=l))
