"""Slow, independent reference implementations in plain Python.

Nothing here imports the package.  Points are tuples; index i has coordinate
j equal to (i // p**j) % p.
"""

from __future__ import annotations

import cmath
import itertools
import math


def points(p, n):
    return [tuple((i // p**j) % p for j in range(n)) for i in range(p**n)]


def index(x, p):
    return sum(int(c) % p * p**j for j, c in enumerate(x))


def add(x, y, p):
    return tuple((a + b) % p for a, b in zip(x, y))


def scale(x, k, p):
    return tuple(k * a % p for a in x)


def e(a, p):
    return cmath.exp(2j * math.pi * a / p)


def poly_eval(terms, x, p):
    """terms: list of (coeff, exponent tuple) for one polynomial."""
    total = 0
    for c, exps in terms:
        m = c
        for xi, k in zip(x, exps):
            m *= xi**k
        total += m
    return total % p


def rank_mod(rows, p):
    M = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(M[0]) if M else 0
    while rank < len(M) and col < ncols:
        piv = next((r for r in range(rank, len(M)) if M[r][col] % p), None)
        if piv is None:
            col += 1
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][col], p - 2, p)
        M[rank] = [v * inv % p for v in M[rank]]
        for r in range(len(M)):
            if r != rank and M[r][col] % p:
                f = M[r][col]
                M[r] = [(a - f * b) % p for a, b in zip(M[r], M[rank])]
        rank += 1
        col += 1
    return rank


def iterated_difference(f, hs, x, p):
    """Delta_{h_1} ... Delta_{h_k} f (x) with Delta_h g(x) = g(x+h) - g(x)."""
    total = 0
    k = len(hs)
    for bits in itertools.product((0, 1), repeat=k):
        shift = x
        for b, h in zip(bits, hs):
            if b:
                shift = add(shift, h, p)
        total += (-1) ** (k - sum(bits)) * f(shift)
    return total % p


def phi_by_differences(polys, hs, n, p):
    """R x n matrix: the linear part in x of the (d-1)-fold difference of each form."""
    out = []
    zero = (0,) * n
    for terms in polys:
        f = lambda y, t=terms: poly_eval(t, y, p)
        base = iterated_difference(f, hs, zero, p)
        row = []
        for j in range(n):
            ej = tuple(1 if i == j else 0 for i in range(n))
            row.append((iterated_difference(f, hs, ej, p) - base) % p)
        out.append(row)
    return out


def wstar_counts(polys, n, d, p, lam=None):
    """(|W*|, |W*(lam)|) by brute force over all (d-1)-tuples."""
    pts = points(p, n)
    full = lamc = 0
    for hs in itertools.product(pts, repeat=d - 1):
        phi = phi_by_differences(polys, list(hs), n, p)
        if rank_mod(phi, p) < len(polys):
            full += 1
        if lam is not None:
            comb = [sum(l * phi[i][j] for i, l in enumerate(lam)) % p for j in range(n)]
            lamc += not any(comb)
    return full, lamc


def gowers_raw(table, p, n, l):
    """Full cube average; table is indexed by point index."""
    pts = points(p, n)
    N = len(pts)
    total = 0
    for x in pts:
        for hs in itertools.product(pts, repeat=l):
            prod = 1
            for bits in itertools.product((0, 1), repeat=l):
                y = x
                for b, h in zip(bits, hs):
                    if b:
                        y = add(y, h, p)
                v = table[index(y, p)]
                prod *= v.conjugate() if (l - sum(bits)) % 2 else v
            total += prod
    return total / N ** (l + 1)


def lambda_tilde(f, g, p, n, l):
    pts = points(p, n)
    total = 0
    for x in pts:
        for r in pts:
            prod = g[index(r, p)]
            for k in range(l):
                prod *= f[index(add(x, scale(r, k, p), p), p)]
            total += prod
    return total / len(pts) ** 2


def dft(table, p, n):
    pts = points(p, n)
    N = len(pts)
    out = []
    for xi in pts:
        s = 0
        for x in pts:
            s += table[index(x, p)] * e(-sum(a * b for a, b in zip(xi, x)) % p, p)
        out.append(s / N)
    return out
