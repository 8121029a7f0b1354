"""Execution settings shared by every enumeration: budget, worker count, reductions.

Scans are split into fixed blocks of ``BLOCK`` items.  Each block is reduced
on its own and the block results are combined by a fixed pairwise tree, so a
floating point total does not depend on how many workers computed the blocks.
"""

from __future__ import annotations

import contextlib
import contextvars
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator

import numpy as np

BLOCK = 4096
DEFAULT_BUDGET = 2**31

# Tolerances: identities vs inequalities.
TOL_IDENTITY = 1e-12
TOL_INEQUALITY = 1e-9

_workers: contextvars.ContextVar[int] = contextvars.ContextVar("ffap_workers", default=1)
_budget: contextvars.ContextVar[int] = contextvars.ContextVar("ffap_budget", default=DEFAULT_BUDGET)
_tol: contextvars.ContextVar[float] = contextvars.ContextVar("ffap_tol", default=TOL_INEQUALITY)


class BudgetExceeded(ValueError):
    """An exact enumeration would visit more items than the configured budget."""


def workers() -> int:
    return _workers.get()


def budget() -> int:
    return _budget.get()


def ineq_tol() -> float:
    """Tolerance for inequality checks (overridable, default 1e-9)."""
    return _tol.get()


@contextlib.contextmanager
def configure(workers: int | None = None, budget: int | None = None, tolerance: float | None = None) -> Iterator[None]:
    """Temporarily override the worker count, enumeration budget or inequality tolerance."""
    tokens = []
    if tolerance is not None:
        if tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        tokens.append((_tol, _tol.set(float(tolerance))))
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        tokens.append((_workers, _workers.set(int(workers))))
    if budget is not None:
        if budget < 1:
            raise ValueError("budget must be >= 1")
        tokens.append((_budget, _budget.set(int(budget))))
    try:
        yield
    finally:
        for var, tok in reversed(tokens):
            var.reset(tok)


def check_budget(cost: int, what: str) -> None:
    limit = budget()
    if cost > limit:
        raise BudgetExceeded(f"{what}: {cost} visits exceeds budget {limit}")


def _pairwise(a: np.ndarray) -> np.ndarray:
    # Reduce along the last axis by repeated halving; shape[-1] must be a power of two.
    while a.shape[-1] > 1:
        h = a.shape[-1] // 2
        a = a[..., :h] + a[..., h:]
    return a[..., 0]


def block_sums(values: np.ndarray) -> np.ndarray:
    """Sum consecutive blocks of ``BLOCK`` values (last block zero padded)."""
    values = np.asarray(values)
    if values.ndim != 1:
        values = values.ravel()
    nblocks = max(1, -(-values.size // BLOCK))
    padded = np.zeros(nblocks * BLOCK, dtype=values.dtype)
    padded[: values.size] = values
    return _pairwise(padded.reshape(nblocks, BLOCK))


def tree_combine(partials: np.ndarray) -> complex | float | int:
    """Combine block partial sums with a fixed pairwise tree."""
    a = np.asarray(partials)
    if a.size == 0:
        return a.dtype.type(0)
    size = 1
    while size < a.size:
        size *= 2
    padded = np.zeros(size, dtype=a.dtype)
    padded[: a.size] = a
    return _pairwise(padded)[()]


def tree_sum(values: np.ndarray):
    """Deterministic sum: fixed-size block sums, then a pairwise tree."""
    return tree_combine(block_sums(values))


def chunk_ranges(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def parallel_map(fn: Callable, items: list) -> list:
    """Apply ``fn`` to each item, in order, on the configured number of threads."""
    k = workers()
    if k == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def reduce_terms(term_fn: Callable[[int, int], np.ndarray], total: int, blocks_per_task: int = 1):
    """Deterministically sum ``term_fn(start, stop)`` over ``range(total)``.

    ``term_fn`` returns the per-item terms for items ``start..stop-1``.  Tasks
    are aligned to ``BLOCK`` so the block partials, and therefore the result,
    are the same for every worker count.
    """
    if total == 0:
        return 0
    ranges = chunk_ranges(total, BLOCK * blocks_per_task)
    partials = parallel_map(lambda r: block_sums(term_fn(*r)), ranges)
    return tree_combine(np.concatenate(partials))


def count_terms(count_fn: Callable[[int, int], int], total: int, chunk: int) -> int:
    """Exact integer total of ``count_fn`` over chunked index ranges."""
    if total == 0:
        return 0
    return int(sum(parallel_map(lambda r: int(count_fn(*r)), chunk_ranges(total, chunk))))
