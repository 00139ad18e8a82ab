import math

import numpy as np

from .errors import EmptyInput, InvalidK, NonFiniteInput


def as_scalar_vec(x) -> np.ndarray:
    """Coerce ``x`` to a contiguous 1-D float32 vector, rejecting empty or non-finite data."""
    with np.errstate(over="ignore"):
        arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0:
        raise EmptyInput("softmax input must contain at least one element")
    if not np.isfinite(arr).all():
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteInput(f"element {bad} is {arr[bad]!r}; only finite inputs are accepted")
    return arr


def check_scalar(x) -> None:
    if not math.isfinite(float(x)):
        raise NonFiniteInput(f"cannot absorb non-finite value {x!r}")


def check_k(k, size: int) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise InvalidK(f"K must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= size:
        raise InvalidK(f"K={k} outside [1, {size}]")
    return k
