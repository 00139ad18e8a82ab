"""Softmax followed by top-K selection, unfused and fused.

Selection keeps a ``K + 1`` slot buffer whose first ``K`` slots stay sorted in
non-increasing order.  Each candidate is written into the spare slot and
bubbled towards the front while its left neighbour is strictly smaller, so
equal values never overtake each other and ties resolve to the smaller index.
Indices are 0-based.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit

from ._checks import as_scalar_vec, check_k
from .errors import EmptyInput
from .kernels import safe_into, safe_max_and_sum
from .reduction import Precision, absorb, expdiff, normalize


class TopKResult(NamedTuple):
    values: np.ndarray
    indices: np.ndarray


@njit(nogil=True, cache=True)
def buffer_insert(u, p, k, value, index):
    """Insert ``(value, index)`` into the sorted K+1 scratch ``u``/``p``."""
    u[k] = value
    p[k] = index
    j = k - 1
    while j >= 0 and u[j] < u[j + 1]:
        u[j], u[j + 1] = u[j + 1], u[j]
        p[j], p[j + 1] = p[j + 1], p[j]
        j -= 1


@njit(nogil=True, cache=True)
def _buffer_sorted(u, k):
    for j in range(k - 1):
        if u[j] < u[j + 1]:
            return False
    return True


def new_buffer(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Fresh ``(u, p)`` scratch: ``K + 1`` slots of ``-inf`` and sentinel index ``-1``."""
    return np.full(k + 1, -np.inf, dtype=np.float32), np.full(k + 1, -1, dtype=np.int64)


class TopKBuffer:
    """Python-side view of the selection scratch, mainly for tests and debugging."""

    def __init__(self, k: int):
        self.k = k
        self.u, self.p = new_buffer(k)

    def insert(self, value, index) -> None:
        buffer_insert(self.u, self.p, self.k, np.float32(value), index)

    def is_sorted(self) -> bool:
        return bool(_buffer_sorted(self.u, self.k))

    def result(self) -> TopKResult:
        return TopKResult(self.u[: self.k].copy(), self.p[: self.k].copy())


@njit(nogil=True, cache=True)
def select_into(y, k, vals, idx):
    u = np.full(k + 1, -np.inf, dtype=np.float32)
    p = np.full(k + 1, -1, dtype=np.int64)
    for j in range(len(y)):
        v = y[j]
        # a candidate not above the K-th slot would just sit in the spare slot
        if v > u[k - 1]:
            buffer_insert(u, p, k, v, j)
    for i in range(k):
        vals[i] = u[i]
        idx[i] = p[i]


@njit(nogil=True, cache=True)
def safe_then_topk_into(x, y, k, vals, idx, ft):
    safe_into(x, y, ft)
    select_into(y, k, vals, idx)


@njit(nogil=True, cache=True)
def safe_fused_topk_into(x, k, vals, idx, ft):
    m, d = safe_max_and_sum(x, ft)
    u = np.full(k + 1, -np.inf, dtype=np.float32)
    p = np.full(k + 1, -1, dtype=np.int64)
    for j in range(len(x)):
        yj = np.float32(expdiff(x[j], m, ft) / d)
        if yj > u[k - 1]:
            buffer_insert(u, p, k, yj, j)
    for i in range(k):
        vals[i] = u[i]
        idx[i] = p[i]


@njit(nogil=True, cache=True)
def online_topk_into(x, k, vals, idx, ft, check):
    m = ft(-np.inf)
    d = ft(0.0)
    c = ft(0.0)
    u = np.full(k + 1, -np.inf, dtype=np.float32)
    p = np.full(k + 1, -1, dtype=np.int64)
    for j in range(len(x)):
        v = x[j]
        m, d, c = absorb(m, d, c, v, ft)
        if v > u[k - 1]:
            buffer_insert(u, p, k, v, j)
            if check and not _buffer_sorted(u, k):
                raise AssertionError("top-k buffer lost its ordering")
    m, d, c = normalize(m, d, c)
    for i in range(k):
        vals[i] = np.float32(expdiff(u[i], m, ft) / d)
        idx[i] = p[i]


def _outputs(k: int) -> tuple[np.ndarray, np.ndarray]:
    return np.empty(k, dtype=np.float32), np.empty(k, dtype=np.int64)


def topk_of(y, k: int) -> TopKResult:
    """The ``k`` largest entries of ``y``, descending, ties to the smaller index."""
    y = np.ascontiguousarray(y, dtype=np.float32).reshape(-1)
    if y.size == 0:
        raise EmptyInput("top-k input must contain at least one element")
    k = check_k(k, y.size)
    vals, idx = _outputs(k)
    select_into(y, k, vals, idx)
    return TopKResult(vals, idx)


def safe_softmax_then_topk(x, k: int, precision: Precision = Precision.SINGLE) -> TopKResult:
    """Safe softmax into a full output vector, then a separate top-K scan of it."""
    x = as_scalar_vec(x)
    k = check_k(k, x.size)
    y = np.empty_like(x)
    vals, idx = _outputs(k)
    safe_then_topk_into(x, y, k, vals, idx, precision.dtype)
    return TopKResult(vals, idx)


def safe_softmax_fused_topk(x, k: int, precision: Precision = Precision.SINGLE) -> TopKResult:
    """Safe softmax whose output pass feeds the top-K buffer instead of memory."""
    x = as_scalar_vec(x)
    k = check_k(k, x.size)
    vals, idx = _outputs(k)
    safe_fused_topk_into(x, k, vals, idx, precision.dtype)
    return TopKResult(vals, idx)


def online_softmax_topk(
    x, k: int, precision: Precision = Precision.SINGLE, check_buffer: bool = False
) -> TopKResult:
    """Single pass over ``x`` tracking ``(m, d)`` and the top-K raw logits together.

    Selection runs on the logits, which orders the same as the probabilities.
    With ``check_buffer`` the buffer ordering is verified after every
    insertion (slower; for debugging).
    """
    x = as_scalar_vec(x)
    k = check_k(k, x.size)
    vals, idx = _outputs(k)
    online_topk_into(x, k, vals, idx, precision.dtype, check_buffer)
    return TopKResult(vals, idx)
