"""Naive, safe and online softmax kernels, fused softmax+top-K, and access accounting."""

from .errors import ConfigError, EmptyInput, InvalidChunk, InvalidK, NonFiniteInput, SoftmaxError
from .instrumentation import (
    AccessStats,
    Algorithm,
    count_accesses,
    oracle_softmax,
    oracle_topk,
    run_instrumented,
)
from .kernels import naive_softmax, online_softmax, safe_softmax
from .reduction import (
    MDPair,
    Precision,
    md_absorb,
    md_identity,
    md_merge,
    md_run_chunked,
    md_run_sequential,
)
from .topk import (
    TopKBuffer,
    TopKResult,
    online_softmax_topk,
    safe_softmax_fused_topk,
    safe_softmax_then_topk,
    topk_of,
)

__all__ = [
    "AccessStats",
    "Algorithm",
    "ConfigError",
    "EmptyInput",
    "InvalidChunk",
    "InvalidK",
    "MDPair",
    "NonFiniteInput",
    "Precision",
    "SoftmaxError",
    "TopKBuffer",
    "TopKResult",
    "count_accesses",
    "md_absorb",
    "md_identity",
    "md_merge",
    "md_run_chunked",
    "md_run_sequential",
    "naive_softmax",
    "online_softmax",
    "online_softmax_topk",
    "oracle_softmax",
    "oracle_topk",
    "run_instrumented",
    "safe_softmax",
    "safe_softmax_fused_topk",
    "safe_softmax_then_topk",
    "topk_of",
]
