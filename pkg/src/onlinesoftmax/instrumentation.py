"""Element-access accounting and double-precision reference implementations.

Accounting model: only traffic to vector elements is counted, that is loads
and stores of ``x``, of any materialized intermediate ``y``, and of the
top-K outputs.  Scalar state (``m``, ``d``, the top-K scratch buffer) is
treated as register resident and never counted; counting it would make the
per-element figures meaningless.  Top-K result writes are tallied apart from
per-element traffic in ``AccessStats.result_stores``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import float32, int64
from numba.experimental import jitclass

from ._checks import as_scalar_vec, check_k
from .errors import EmptyInput, InvalidK
from .kernels import BODIES
from .reduction import Precision
from .topk import TopKResult, online_topk_into, safe_fused_topk_into, safe_then_topk_into


class Algorithm(enum.Enum):
    """Benchmarked algorithms; values are the column keys used in sweep output."""

    NAIVE = "NaiveSoftmax"
    SAFE = "SafeSoftmax"
    ONLINE = "OnlineSoftmax"
    SAFE_THEN_TOPK = "SafeSoftmaxUnfusedTopK"
    SAFE_FUSED_TOPK = "SafeSoftmaxFusedTopK"
    ONLINE_FUSED_TOPK = "OnlineSoftmaxFusedTopK"

    @property
    def uses_topk(self) -> bool:
        return self in (Algorithm.SAFE_THEN_TOPK, Algorithm.SAFE_FUSED_TOPK, Algorithm.ONLINE_FUSED_TOPK)

    @classmethod
    def parse(cls, name: str) -> "Algorithm":
        key = name.strip().lower().replace("-", "_")
        for alg in cls:
            if key in (alg.name.lower(), alg.value.lower()):
                return alg
        raise ValueError(f"unknown algorithm {name!r}")


@dataclass(frozen=True)
class AccessStats:
    loads: int = 0
    stores: int = 0
    result_stores: int = 0

    @property
    def vector_accesses(self) -> int:
        """Loads plus stores of input and intermediate/output vectors."""
        return self.loads + self.stores

    @property
    def total(self) -> int:
        return self.loads + self.stores + self.result_stores

    def __add__(self, other: "AccessStats") -> "AccessStats":
        return AccessStats(
            self.loads + other.loads,
            self.stores + other.stores,
            self.result_stores + other.result_stores,
        )


@jitclass([("data", float32[::1]), ("loads", int64), ("stores", int64)])
class CountingVec:
    """float32 vector whose element reads and writes are tallied."""

    def __init__(self, data):
        self.data = data
        self.loads = 0
        self.stores = 0

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, i):
        self.loads += 1
        return self.data[i]

    def __setitem__(self, i, v):
        self.stores += 1
        self.data[i] = v


@jitclass([("data", int64[::1]), ("loads", int64), ("stores", int64)])
class CountingIndexVec:
    """int64 counterpart of :class:`CountingVec`, for top-K index output."""

    def __init__(self, data):
        self.data = data
        self.loads = 0
        self.stores = 0

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, i):
        self.loads += 1
        return self.data[i]

    def __setitem__(self, i, v):
        self.stores += 1
        self.data[i] = v


def _stats(*vecs) -> AccessStats:
    return AccessStats(sum(v.loads for v in vecs), sum(v.stores for v in vecs))


def run_instrumented(
    algorithm: Algorithm, x, k: int | None = None, precision: Precision = Precision.SINGLE
) -> tuple[np.ndarray | TopKResult, AccessStats]:
    """Run ``algorithm`` on ``x`` through counting vectors.

    Returns the numerical result (bit-identical to the plain entry point) and
    the access tally.
    """
    x = as_scalar_vec(x)
    cx = CountingVec(x.copy())
    ft = precision.dtype
    if not algorithm.uses_topk:
        if k is not None:
            raise InvalidK(f"{algorithm.value} takes no K")
        cy = CountingVec(np.empty_like(x))
        name = {Algorithm.NAIVE: "naive", Algorithm.SAFE: "safe", Algorithm.ONLINE: "online"}[algorithm]
        BODIES[name](cx, cy, ft)
        return cy.data, _stats(cx, cy)

    if k is None:
        raise InvalidK(f"{algorithm.value} requires K")
    k = check_k(k, x.size)
    cv = CountingVec(np.empty(k, dtype=np.float32))
    cz = CountingIndexVec(np.empty(k, dtype=np.int64))
    vecs = [cx]
    if algorithm is Algorithm.SAFE_THEN_TOPK:
        cy = CountingVec(np.empty_like(x))
        safe_then_topk_into(cx, cy, k, cv, cz, ft)
        vecs.append(cy)
    elif algorithm is Algorithm.SAFE_FUSED_TOPK:
        safe_fused_topk_into(cx, k, cv, cz, ft)
    else:
        online_topk_into(cx, k, cv, cz, ft, True)
    per_element = _stats(*vecs)
    results = _stats(cv, cz)
    stats = AccessStats(
        per_element.loads + results.loads,
        per_element.stores,
        results.stores,
    )
    return TopKResult(cv.data, cz.data), stats


def count_input(v: int, seed: int = 0) -> np.ndarray:
    """Deterministic standard-normal input used for access counting."""
    return np.random.default_rng(seed).standard_normal(v).astype(np.float32)


def count_accesses(algorithm: Algorithm, v: int, k: int | None = None) -> AccessStats:
    """Exact element-access tally of ``algorithm`` on a length-``v`` vector."""
    if v < 1:
        raise EmptyInput("vector length must be at least 1")
    if algorithm.uses_topk and k is not None:
        check_k(k, v)
    _, stats = run_instrumented(algorithm, count_input(v), k)
    return stats


def oracle_softmax(x) -> np.ndarray:
    """Max-shifted softmax of ``x`` evaluated entirely in float64."""
    x = as_scalar_vec(x).astype(np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def oracle_topk(y, k: int) -> TopKResult:
    """Top-K by full sort on (value descending, index ascending)."""
    y = np.asarray(y).reshape(-1)
    if y.size == 0:
        raise EmptyInput("top-k input must contain at least one element")
    k = check_k(k, y.size)
    order = np.lexsort((np.arange(y.size), -y))[:k]
    return TopKResult(y[order].copy(), order.astype(np.int64))
