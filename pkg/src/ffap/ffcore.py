"""Prime field arithmetic on F_p^n with a single canonical point encoding.

A point ``x = (x_0, ..., x_{n-1})`` is stored as the integer
``x_0 + x_1 p + ... + x_{n-1} p^{n-1}`` (coordinate j is base-p digit j).
Every table, bitset and scan in the package uses this layout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import runtime

MAX_PRIME = 2**16
DEFAULT_POINT_LIMIT = 2**31


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldParams:
    """The space F_p^n.  ``limit`` caps p**n."""

    p: int
    n: int
    limit: int = field(default=DEFAULT_POINT_LIMIT, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise ValueError(f"p={self.p} is not prime")
        if self.p > MAX_PRIME:
            raise ValueError(f"p={self.p} exceeds {MAX_PRIME}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p**self.n > self.limit:
            raise runtime.BudgetExceeded(f"p^n = {self.p}^{self.n} exceeds limit {self.limit}")

    @property
    def size(self) -> int:
        return self.p**self.n

    @cached_property
    def weights(self) -> np.ndarray:
        return self.p ** np.arange(self.n, dtype=np.int64)

    @cached_property
    def coords(self) -> np.ndarray:
        """(p^n, n) array: row i is the coordinate vector of point i."""
        idx = np.arange(self.size, dtype=np.int64)
        out = np.empty((self.size, self.n), dtype=np.int64)
        for j in range(self.n):
            out[:, j] = idx % self.p
            idx //= self.p
        out.setflags(write=False)
        return out

    @cached_property
    def inverses(self) -> np.ndarray:
        """inverses[a] = a^{-1} mod p (inverses[0] = 0)."""
        inv = np.array([pow(a, self.p - 2, self.p) if a else 0 for a in range(self.p)], dtype=np.int64)
        inv.setflags(write=False)
        return inv

    def encode(self, coords) -> int | np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        if c.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} coordinates, got {c.shape[-1]}")
        return (np.mod(c, self.p) @ self.weights)[()]

    def decode(self, index) -> np.ndarray:
        idx = np.asarray(index, dtype=np.int64)
        if np.any((idx < 0) | (idx >= self.size)):
            raise ValueError("point index out of range")
        return self.coords[idx]

    def add(self, a, b):
        """Index of a + b for point indices a, b (broadcasting)."""
        s = np.mod(self.coords[np.asarray(a)] + self.coords[np.asarray(b)], self.p)
        return s @ self.weights

    def scale_add(self, a, b, k):
        """Index of a + k*b for point indices a, b and integer scalar(s) k."""
        ca = self.coords[np.asarray(a)]
        cb = self.coords[np.asarray(b)]
        k = np.asarray(k, dtype=np.int64)[..., None]
        return np.mod(ca + k * cb, self.p) @ self.weights

    def neg(self, a):
        return np.mod(-self.coords[np.asarray(a)], self.p) @ self.weights


def char_e(a: int, params: FieldParams) -> complex:
    """Additive character e(a) = exp(2 pi i a / p)."""
    return cmath.exp(2j * math.pi * (a % params.p) / params.p)


def char_table(p: int) -> np.ndarray:
    """e(a) for a = 0..p-1."""
    return np.exp(2j * np.pi * np.arange(p) / p)


def dot(x: Sequence[int], y: Sequence[int], p: int) -> int:
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return int(np.mod(x, p) @ np.mod(y, p) % p)


class DenseFunction:
    """A complex function on F_p^n stored as a read-only table in index order."""

    __slots__ = ("params", "table", "bounded")

    def __init__(self, params: FieldParams, table, bounded: bool = False):
        t = np.array(table, dtype=np.complex128).reshape(-1)
        if t.size != params.size:
            raise ValueError(f"table has {t.size} entries, expected {params.size}")
        if bounded and t.size and np.max(np.abs(t)) > 1 + runtime.TOL_IDENTITY:
            raise ValueError("function is flagged 1-bounded but max |f| > 1")
        t.setflags(write=False)
        self.params = params
        self.table = t
        self.bounded = bounded

    @classmethod
    def constant(cls, params: FieldParams, c: complex) -> "DenseFunction":
        return cls(params, np.full(params.size, c, dtype=np.complex128), bounded=abs(c) <= 1)

    @classmethod
    def indicator(cls, params: FieldParams, mask) -> "DenseFunction":
        return cls(params, np.asarray(mask, dtype=np.float64), bounded=True)

    @classmethod
    def linear_phase(cls, params: FieldParams, xi) -> "DenseFunction":
        """x -> e(xi . x)."""
        phases = params.coords @ np.mod(np.asarray(xi, dtype=np.int64), params.p) % params.p
        return cls(params, char_table(params.p)[phases], bounded=True)

    def __repr__(self):
        return f"DenseFunction(p={self.params.p}, n={self.params.n}, bounded={self.bounded})"

    def __eq__(self, other):
        return (
            isinstance(other, DenseFunction)
            and self.params == other.params
            and np.array_equal(self.table, other.table)
        )

    def mean(self) -> complex:
        return complex(runtime.tree_sum(self.table)) / self.params.size


def _cube(f: DenseFunction) -> np.ndarray:
    # With little-endian indices, C-order axis k of the reshaped table is coordinate n-1-k.
    return f.table.reshape((f.params.p,) * f.params.n)


def fourier(f: DenseFunction) -> DenseFunction:
    """f^(xi) = E_x f(x) e(-xi . x), one length-p DFT per coordinate axis."""
    runtime.check_budget(f.params.size * f.params.p * f.params.n, "fourier")
    out = np.fft.fftn(_cube(f)) / f.params.size
    return DenseFunction(f.params, out.reshape(-1))


def inverse_fourier(fh: DenseFunction) -> DenseFunction:
    """f(x) = sum_xi f^(xi) e(xi . x)."""
    runtime.check_budget(fh.params.size * fh.params.p * fh.params.n, "inverse_fourier")
    out = np.fft.ifftn(_cube(fh)) * fh.params.size
    return DenseFunction(fh.params, out.reshape(-1))
