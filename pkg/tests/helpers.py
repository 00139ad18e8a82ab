import numpy as np


def ordered(a):
    """Map float32 values to integers whose differences count representable steps."""
    i = np.asarray(a, dtype=np.float32).view(np.int32).astype(np.int64)
    return np.where(i < 0, -(i & 0x7FFFFFFF), i)


def ulp_diff(a, b):
    return np.abs(ordered(a) - ordered(b))


def max_ulp(a, b) -> int:
    return int(ulp_diff(a, b).max()) if np.size(a) else 0


def rel_err(got, ref, floor=1e-30):
    got = np.asarray(got, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    mask = ref > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(got[mask] - ref[mask]) / ref[mask]))
