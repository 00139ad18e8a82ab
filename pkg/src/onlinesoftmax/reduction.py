"""Running (max, normalizer) state and the merge operator that combines two states.

A state ``(m, d)`` summarises a block of logits: ``m`` is the block maximum and
``d`` is ``sum(exp(x_j - m))``.  Absorbing one element rescales ``d`` whenever
the maximum grows; merging two states rescales both onto the larger maximum.
Merge is associative and commutative, so a vector can be reduced in chunks and
the chunk states combined in any bracketing.

The normalizer is accumulated in the selected precision together with a
low-order correction term ``c`` (two-sum compensation), so that long vectors
keep single-precision ``d`` within a few ULPs of the exact sum.  ``c`` rides
along in every state; ``d`` alone is the value callers should read once a run
has finished, because finished runs fold ``c`` back into ``d``.
"""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np
from numba import njit

from ._checks import as_scalar_vec, check_scalar
from .errors import InvalidChunk


class Precision(enum.Enum):
    """Accumulator width for ``m`` and ``d``."""

    SINGLE = "single"
    DOUBLE = "double"

    @property
    def dtype(self) -> type:
        return np.float32 if self is Precision.SINGLE else np.float64

    @classmethod
    def of(cls, value) -> "Precision":
        return cls.DOUBLE if isinstance(value, np.float64) else cls.SINGLE


class MDPair(NamedTuple):
    m: float
    d: float
    c: float = 0.0

    @property
    def precision(self) -> Precision:
        return Precision.of(self.m)

    def is_identity(self) -> bool:
        return self.m == -math.inf and self.d == 0


@njit(nogil=True, cache=True)
def two_sum(a, b):
    """``a + b`` rounded, and the exact rounding error."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(nogil=True, cache=True)
def expdiff(a, b, ft):
    """``exp(a - b)`` rounded once to ``ft``.

    The difference is formed in float64, where it is exact for float32
    operands, so large ``|a - b|`` does not pick up a rounding error that
    exp would then amplify.
    """
    return ft(np.exp(np.float64(a) - np.float64(b)))


@njit(nogil=True, cache=True)
def absorb(m, d, c, x, ft):
    v = ft(x)
    if v > m:
        # identity state: exp(-inf - v) taken as 0
        s = ft(0.0) if m == -np.inf else expdiff(m, v, ft)
        hi, lo = two_sum(d * s, ft(1.0))
        return v, hi, c * s + lo
    hi, lo = two_sum(d, expdiff(v, m, ft))
    return m, hi, c + lo


@njit(nogil=True, cache=True)
def merge(am, ad, ac, bm, bd, bc, ft):
    # identity operands short-circuit: exp(-inf - (-inf)) would be NaN
    if am == -np.inf:
        return bm, bd, bc
    if bm == -np.inf:
        return am, ad, ac
    big = max(am, bm)
    sa = expdiff(am, big, ft)
    sb = expdiff(bm, big, ft)
    hi, lo = two_sum(ad * sa, bd * sb)
    return big, hi, (ac * sa + bc * sb) + lo


@njit(nogil=True, cache=True)
def normalize(m, d, c):
    hi, lo = two_sum(d, c)
    return m, hi, lo


@njit(nogil=True, cache=True)
def run_range(x, lo, hi, ft):
    m = ft(-np.inf)
    d = ft(0.0)
    c = ft(0.0)
    for j in range(lo, hi):
        m, d, c = absorb(m, d, c, x[j], ft)
    return normalize(m, d, c)


@njit(nogil=True, cache=True)
def run_chunked(x, chunk, ft):
    n = len(x)
    m = ft(-np.inf)
    d = ft(0.0)
    c = ft(0.0)
    for start in range(0, n, chunk):
        pm, pd, pc = run_range(x, start, min(start + chunk, n), ft)
        m, d, c = merge(m, d, c, pm, pd, pc, ft)
    return normalize(m, d, c)


@njit(nogil=True, cache=True)
def prefix_trace(x, ft):
    n = len(x)
    ms = np.empty(n, dtype=ft)
    ds = np.empty(n, dtype=ft)
    m = ft(-np.inf)
    d = ft(0.0)
    c = ft(0.0)
    for j in range(n):
        m, d, c = absorb(m, d, c, x[j], ft)
        ms[j] = m
        ds[j] = d
    return ms, ds


def _pair(values, precision: Precision) -> MDPair:
    t = precision.dtype
    m, d, c = values
    return MDPair(t(m), t(d), t(c))


def _coerce(state, precision: Precision | None = None) -> MDPair:
    if not isinstance(state, MDPair):
        state = MDPair(*state)
    if precision is None:
        precision = state.precision
    return _pair(state, precision)


def md_identity(precision: Precision = Precision.SINGLE) -> MDPair:
    """The state of an empty block, ``(-inf, 0)``."""
    return _pair((-np.inf, 0.0, 0.0), precision)


def md_absorb(state, x) -> MDPair:
    """Fold one finite element into ``state``.

    Plain tuples and Python floats are taken as single precision; pass an
    ``MDPair`` of ``np.float64`` values to absorb in double.
    """
    check_scalar(x)
    s = _coerce(state)
    return _pair(absorb(s.m, s.d, s.c, np.float32(x), s.precision.dtype), s.precision)


def md_merge(a, b) -> MDPair:
    a = _coerce(a)
    b = _coerce(b, a.precision)
    return _pair(merge(a.m, a.d, a.c, b.m, b.d, b.c, a.precision.dtype), a.precision)


def md_run_sequential(x, precision: Precision = Precision.SINGLE) -> MDPair:
    """Reduce ``x`` left to right in one pass.

    ``m`` is exactly ``max(x)``; ``d`` approximates ``sum(exp(x - max(x)))``.
    """
    x = as_scalar_vec(x)
    return _pair(run_range(x, 0, x.size, precision.dtype), precision)


def md_run_chunked(x, chunk: int, precision: Precision = Precision.SINGLE) -> MDPair:
    """Reduce contiguous chunks of ``x`` independently, then merge them left to right.

    The per-chunk reductions are independent; the merge order is fixed so
    that results are reproducible for a given chunk size.
    """
    if isinstance(chunk, bool) or int(chunk) != chunk or chunk < 1:
        raise InvalidChunk(f"chunk must be a positive integer, got {chunk!r}")
    x = as_scalar_vec(x)
    return _pair(run_chunked(x, int(chunk), precision.dtype), precision)


def md_prefix_trace(x, precision: Precision = Precision.SINGLE) -> tuple[np.ndarray, np.ndarray]:
    """Running ``m`` and ``d`` after each absorbed element of ``x``."""
    x = as_scalar_vec(x)
    return prefix_trace(x, precision.dtype)


def md_tree_reduce(states) -> MDPair:
    """Merge ``states`` pairwise in a balanced tree (used to exercise associativity)."""
    states = [_coerce(s) for s in states]
    if not states:
        return md_identity()
    while len(states) > 1:
        nxt = [md_merge(states[i], states[i + 1]) for i in range(0, len(states) - 1, 2)]
        if len(states) % 2:
            nxt.append(states[-1])
        states = nxt
    return states[0]
