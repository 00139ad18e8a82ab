"""Whole-vector softmax: naive, safe (three passes) and online (two passes).

Each algorithm is written once as a generic ``*_into(x, y, ft)`` body that
only indexes ``x`` and ``y``; ``ft`` is the accumulator float type.  The
public functions run it on plain float32 arrays, and
:mod:`onlinesoftmax.instrumentation` runs the very same body on counting
wrappers, so instrumented output is bit-identical to plain output.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._checks import as_scalar_vec
from .reduction import Precision, expdiff, run_range, two_sum


@njit(nogil=True, cache=True)
def naive_into(x, y, ft):
    # no max shift: exp overflows to inf above ~88.7 in single precision
    n = len(x)
    d = ft(0.0)
    c = ft(0.0)
    for j in range(n):
        d, lo = two_sum(d, expdiff(x[j], 0.0, ft))
        c += lo
    d = d + c
    for i in range(n):
        y[i] = np.float32(expdiff(x[i], 0.0, ft) / d)


@njit(nogil=True, cache=True)
def safe_max_and_sum(x, ft):
    n = len(x)
    m = ft(-np.inf)
    for k in range(n):
        v = ft(x[k])
        if v > m:
            m = v
    d = ft(0.0)
    c = ft(0.0)
    for j in range(n):
        d, lo = two_sum(d, expdiff(x[j], m, ft))
        c += lo
    return m, d + c


@njit(nogil=True, cache=True)
def safe_into(x, y, ft):
    m, d = safe_max_and_sum(x, ft)
    for i in range(len(x)):
        y[i] = np.float32(expdiff(x[i], m, ft) / d)


@njit(nogil=True, cache=True)
def online_into(x, y, ft):
    m, d, _ = run_range(x, 0, len(x), ft)
    for i in range(len(x)):
        y[i] = np.float32(expdiff(x[i], m, ft) / d)


BODIES = {"naive": naive_into, "safe": safe_into, "online": online_into}


def _run(name, x, precision: Precision) -> np.ndarray:
    x = as_scalar_vec(x)
    y = np.empty_like(x)
    BODIES[name](x, y, precision.dtype)
    return y


def naive_softmax(x, precision: Precision = Precision.SINGLE) -> np.ndarray:
    """``exp(x_i) / sum(exp(x))`` with no overflow protection.

    Inputs above roughly 88.7 overflow single precision and the result then
    holds inf or NaN.  That is returned as-is.
    """
    return _run("naive", x, precision)


def safe_softmax(x, precision: Precision = Precision.SINGLE) -> np.ndarray:
    """Max-shifted softmax in three passes: max, normalizer, outputs."""
    return _run("safe", x, precision)


def online_softmax(x, precision: Precision = Precision.SINGLE) -> np.ndarray:
    """Max-shifted softmax in two passes: fused max+normalizer, then outputs."""
    return _run("online", x, precision)
