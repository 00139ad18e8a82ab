"""Acceptance criteria 1-9; the terminal summary prints one PASS/FAIL line per criterion."""

import time
from pathlib import Path

import numpy as np
import pytest

from onlinesoftmax import (
    Algorithm,
    md_identity,
    md_merge,
    md_run_chunked,
    md_run_sequential,
    naive_softmax,
    online_softmax,
    online_softmax_topk,
    oracle_softmax,
    oracle_topk,
    safe_softmax,
    safe_softmax_fused_topk,
    safe_softmax_then_topk,
    topk_of,
)
from onlinesoftmax.bench import SweepConfig, emit_csv, main, parse_csv, run_sweep
from onlinesoftmax.instrumentation import count_accesses
from onlinesoftmax.reduction import md_prefix_trace

from .helpers import max_ulp, rel_err

RESULTS = Path(__file__).resolve().parent.parent / "results"
COUNT_SIZES = [100, 1000, 100_000]
K = 5


def criterion(n, title):
    return pytest.mark.criterion(n, title)


def expected_counts(v):
    """Exact per-algorithm figures the access model must hit."""
    return {
        Algorithm.NAIVE: dict(accesses=3 * v),
        Algorithm.SAFE: dict(accesses=4 * v),
        Algorithm.ONLINE: dict(accesses=3 * v),
        Algorithm.SAFE_THEN_TOPK: dict(accesses=5 * v),
        Algorithm.ONLINE_FUSED_TOPK: dict(loads=v, stores=0),
    }


def check_counts(v, stats):
    for alg, want in expected_counts(v).items():
        got = stats[alg]
        for key, value in want.items():
            actual = got.vector_accesses if key == "accesses" else getattr(got, key)
            assert actual == value, f"V={v} {alg.value} {key}: {actual} != {value}"


@criterion(1, "access-count model exact")
def test_c1_access_counts():
    for alg in Algorithm:
        count_accesses(alg, 10, K if alg.uses_topk else None)  # compile
    t0 = time.perf_counter()
    for v in COUNT_SIZES:
        stats = {a: count_accesses(a, v, K if a.uses_topk else None) for a in Algorithm}
        check_counts(v, stats)
    elapsed = time.perf_counter() - t0
    print(f"criterion 1 counting time {elapsed:.3f} s")
    assert elapsed < 1.0


@criterion(2, "safe/online/fused top-k match float64 oracle")
def test_c2_oracle_agreement():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        v = int(rng.integers(1, 10_001))
        x = rng.standard_normal(v).astype(np.float32)
        ref = oracle_softmax(x)
        worst = max(worst, rel_err(safe_softmax(x), ref), rel_err(online_softmax(x), ref))
        k = min(K, v)
        for fn in (safe_softmax_fused_topk, online_softmax_topk):
            r = fn(x, k)
            worst = max(worst, rel_err(r.values, ref[r.indices]))
    elapsed = time.perf_counter() - t0
    print(f"criterion 2 worst relative error {worst:.3e}, {elapsed:.1f} s")
    assert worst <= 1e-6
    assert elapsed < 60


@criterion(3, "naive overflows, safe and online stay finite")
def test_c3_overflow_safety():
    rng = np.random.default_rng(3)
    for _ in range(100):
        v = int(rng.integers(16, 4097))
        x = (rng.uniform(80, 200, v) * rng.choice([-1.0, 1.0], v)).astype(np.float32)
        x[rng.integers(0, v)] = abs(x[0])  # at least one overflowing element
        assert not np.isfinite(naive_softmax(x)).all()
        for fn in (safe_softmax, online_softmax):
            y = fn(x)
            assert np.isfinite(y).all()
            assert abs(y.sum(dtype=np.float64) - 1) <= 1e-5


@criterion(4, "sequential normalizer equals exact max and oracle sum")
def test_c4_sequential_normalizer():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(10_000):
        v = int(rng.integers(1, 10_001))
        scale = (1.0, 10.0, 100.0)[i % 3]
        x = (rng.standard_normal(v) * scale).astype(np.float32)
        s = md_run_sequential(x)
        x64 = x.astype(np.float64)
        assert s.m == x.max()
        ref = np.exp(x64 - x64.max()).sum()
        worst = max(worst, abs(float(s.d) - ref) / ref)
    print(f"criterion 4 worst relative error of d {worst:.3e}")
    assert worst <= 1e-6


def random_state(rng):
    if rng.random() < 0.05:
        return md_identity()
    x = (rng.standard_normal(int(rng.integers(1, 200))) * rng.choice([1, 10, 50])).astype(np.float32)
    return md_run_sequential(x)


def bits(s):
    return (np.float32(s.m).tobytes(), np.float32(s.d).tobytes(), np.float32(s.c).tobytes())


@criterion(5, "merge operator algebra and chunked reduction")
def test_c5_merge_algebra():
    rng = np.random.default_rng(5)
    worst_comm, worst_assoc = 0, 0.0
    for _ in range(10_000):
        a, b, c = random_state(rng), random_state(rng), random_state(rng)
        ident = md_identity()
        assert bits(md_merge(a, ident)) == bits(a) == bits(md_merge(ident, a))
        ab, ba = md_merge(a, b), md_merge(b, a)
        assert ab.m == ba.m
        worst_comm = max(worst_comm, max_ulp(ab.d, ba.d))
        left, right = md_merge(ab, c), md_merge(a, md_merge(b, c))
        assert left.m == right.m
        if right.is_identity():
            assert left.is_identity()
            continue
        worst_assoc = max(worst_assoc, abs(float(left.d) - float(right.d)) / float(right.d))
    print(f"criterion 5 commutativity {worst_comm} ulp, associativity {worst_assoc:.3e}")
    assert worst_comm <= 2
    assert worst_assoc <= 1e-6

    worst_chunk = 0.0
    for v in (1, 7, 100, 1000, 4096):
        x = (rng.standard_normal(v) * 20).astype(np.float32)
        seq = md_run_sequential(x)
        for chunk in range(1, v + 1):
            r = md_run_chunked(x, chunk)
            assert r.m == seq.m
            worst_chunk = max(worst_chunk, abs(float(r.d) - float(seq.d)) / float(seq.d))
    print(f"criterion 5 chunked vs sequential {worst_chunk:.3e}")
    assert worst_chunk <= 1e-6


@criterion(6, "normalizer bound 1 <= d_j <= j")
def test_c6_prefix_bound():
    rng = np.random.default_rng(6)
    for i in range(10_000):
        v = int(rng.integers(1, 2001))
        kind = i % 4
        if kind == 0:
            x = rng.standard_normal(v)
        elif kind == 1:
            x = rng.integers(-3, 3, v)  # ties keep d at integers
        elif kind == 2:
            x = np.sort(rng.standard_normal(v))  # rescale at every step
        else:
            x = rng.uniform(-100, 100, v)
        _, ds = md_prefix_trace(x.astype(np.float32))
        assert np.all(ds >= 1.0)
        assert np.all(ds <= np.arange(1, v + 1))


@criterion(7, "top-k entry points agree with each other and the sort oracle")
def test_c7_topk_equivalence():
    rng = np.random.default_rng(7)
    worst = 0
    for k in (1, 5, 10):
        for i in range(10_000):
            v = int(rng.integers(k, 2049))
            if i % 2:
                x = rng.standard_normal(v).astype(np.float32)
            else:
                x = rng.integers(-8, 8, v).astype(np.float32)  # dense ties
            ref = oracle_topk(safe_softmax(x), k)
            results = [
                safe_softmax_then_topk(x, k),
                safe_softmax_fused_topk(x, k),
                online_softmax_topk(x, k),
                topk_of(online_softmax(x), k),
            ]
            for r in results:
                np.testing.assert_array_equal(r.indices, ref.indices)
                worst = max(worst, max_ulp(r.values, ref.values))
    print(f"criterion 7 worst value difference {worst} ulp")
    assert worst <= 4


@criterion(8, "throughput floors at V >= 1e5 and committed sweep artifact")
@pytest.mark.slow
def test_c8_performance_floor():
    t0 = time.perf_counter()
    algs = [Algorithm.SAFE, Algorithm.ONLINE, Algorithm.SAFE_THEN_TOPK, Algorithm.ONLINE_FUSED_TOPK]
    cfg = SweepConfig(algorithms=algs, vector_sizes=[100_000, 300_000], batch=100, k=K,
                      repeats=20, warmup=2, seed=8, threads=1)
    rows = run_sweep(cfg)
    failures = []
    for row in rows:
        softmax = row.speedup(Algorithm.ONLINE, Algorithm.SAFE)
        fused = row.speedup(Algorithm.ONLINE_FUSED_TOPK, Algorithm.SAFE_THEN_TOPK)
        print(f"criterion 8 V={row.v}: online/safe {softmax:.3f}, online-fused/safe-unfused {fused:.3f}")
        if softmax < 0.95:
            failures.append(f"V={row.v} online/safe {softmax:.3f} < 0.95")
        if fused < 1.2:
            failures.append(f"V={row.v} fused ratio {fused:.3f} < 1.2")
    assert not failures, failures
    assert time.perf_counter() - t0 < 600

    table = RESULTS / "sweep_batch100.csv"
    assert table.exists() and (RESULTS / "sweep_batch100.meta.json").exists()
    committed = parse_csv(table)
    assert set(committed[0].algorithms) == set(Algorithm)
    assert all(r.timed and all(t is not None and t > 0 for t in r.throughput.values()) for r in committed)


@criterion(9, "counts-only CLI table matches the access model")
def test_c9_cli_counts_only(tmp_path):
    out = tmp_path / "counts.csv"
    rc = main(["--counts-only", "--sizes", ",".join(map(str, COUNT_SIZES)), "--k", str(K), "--out", str(out)])
    assert rc == 0
    rows = parse_csv(out)
    assert [r.v for r in rows] == COUNT_SIZES
    for row in rows:
        assert not row.timed
        check_counts(row.v, row.counts)
    again = tmp_path / "again.csv"
    emit_csv(rows, again)
    assert again.read_bytes() == out.read_bytes()
