"""Throughput sweep over (algorithm x vector size) with CSV and plot-data output.

Each cell times a whole batch of vectors per repeat and reports the median;
repeats are interleaved across algorithms so slow drift on a busy machine
hits every column alike.  Throughput is in elements per second.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np

from .errors import ConfigError, InvalidK, SoftmaxError
from .instrumentation import AccessStats, Algorithm, count_accesses
from .kernels import naive_into, online_into, safe_into
from .topk import online_topk_into, safe_fused_topk_into, safe_then_topk_into

log = logging.getLogger(__name__)

# (numerator, denominator) pairs reported as speedup columns when both are swept
SPEEDUPS = [
    (Algorithm.ONLINE, Algorithm.SAFE),
    (Algorithm.NAIVE, Algorithm.SAFE),
    (Algorithm.SAFE_FUSED_TOPK, Algorithm.SAFE_THEN_TOPK),
    (Algorithm.ONLINE_FUSED_TOPK, Algorithm.SAFE_THEN_TOPK),
]
COUNT_FIELDS = ("loads", "stores", "result_stores", "accesses")
FORMATS = {"csv": ",", "tsv": "\t"}


def log_sizes(vmin: int, vmax: int, points: int) -> list[int]:
    """``points`` log-spaced integer sizes from ``vmin`` to ``vmax`` inclusive, deduplicated."""
    if vmin < 1 or vmax < vmin or points < 1:
        raise ConfigError(f"bad size range vmin={vmin} vmax={vmax} points={points}")
    if points == 1:
        return [vmin]
    raw = np.geomspace(vmin, vmax, points)
    return sorted({int(round(v)) for v in raw})


@dataclass
class SweepConfig:
    algorithms: list[Algorithm] = field(default_factory=lambda: list(Algorithm))
    vector_sizes: list[int] = field(default_factory=lambda: log_sizes(40, 500_000, 12))
    batch: int = 100
    k: int = 5
    repeats: int = 5
    warmup: int = 1
    seed: int = 0
    threads: int = 1
    counts_only: bool = False

    def validate(self) -> None:
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm in selection")
        if not self.vector_sizes:
            raise ConfigError("vector_sizes is empty")
        if any(int(v) != v or v < 1 for v in self.vector_sizes):
            raise ConfigError(f"vector sizes must be positive integers: {self.vector_sizes}")
        for name in ("batch", "k", "repeats", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be non-negative, got {self.warmup}")


@dataclass
class SweepRow:
    v: int
    algorithms: tuple[Algorithm, ...]
    throughput: dict[Algorithm, float | None] = field(default_factory=dict)
    counts: dict[Algorithm, AccessStats | None] = field(default_factory=dict)
    timed: bool = True

    def speedup(self, num: Algorithm, den: Algorithm) -> float | None:
        a, b = self.throughput.get(num), self.throughput.get(den)
        if a is None or b is None or b == 0:
            return None
        return a / b

    def speedup_pairs(self) -> list[tuple[Algorithm, Algorithm]]:
        return [(n, d) for n, d in SPEEDUPS if n in self.algorithms and d in self.algorithms]


def generate_inputs(seed: int, batch: int, v: int) -> np.ndarray:
    """``batch`` standard-normal float32 vectors of length ``v``, one per row."""
    if batch < 1 or v < 1:
        raise ConfigError(f"batch and v must be positive, got batch={batch} v={v}")
    return np.random.default_rng(seed).standard_normal((batch, v), dtype=np.float32)


def _batch_runner(alg: Algorithm, xs: np.ndarray, k: int, pool: ThreadPoolExecutor | None = None) -> Callable[[], None]:
    """A zero-argument callable that runs ``alg`` over every row of ``xs``.

    Calls the compiled bodies directly: inputs were validated at generation,
    and re-validating inside the timed region would add a pass to every
    column.
    """
    f32 = np.float32
    batch, v = xs.shape
    if alg.uses_topk and not 1 <= k <= v:
        raise InvalidK(f"K={k} outside [1, {v}]")
    ys = np.empty_like(xs)
    vals = np.empty((batch, k), dtype=np.float32)
    idx = np.empty((batch, k), dtype=np.int64)

    if alg is Algorithm.NAIVE:
        one = lambda i: naive_into(xs[i], ys[i], f32)
    elif alg is Algorithm.SAFE:
        one = lambda i: safe_into(xs[i], ys[i], f32)
    elif alg is Algorithm.ONLINE:
        one = lambda i: online_into(xs[i], ys[i], f32)
    elif alg is Algorithm.SAFE_THEN_TOPK:
        one = lambda i: safe_then_topk_into(xs[i], ys[i], k, vals[i], idx[i], f32)
    elif alg is Algorithm.SAFE_FUSED_TOPK:
        one = lambda i: safe_fused_topk_into(xs[i], k, vals[i], idx[i], f32)
    else:
        one = lambda i: online_topk_into(xs[i], k, vals[i], idx[i], f32, False)

    one(0)  # compile before any timing
    rows = range(batch)
    if pool is None:
        def run():
            for i in rows:
                one(i)
    else:
        def run():
            list(pool.map(one, rows))

    return run


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    cfg.validate()
    rows = []
    for v in sorted(set(cfg.vector_sizes)):
        row = SweepRow(v=v, algorithms=tuple(cfg.algorithms), timed=not cfg.counts_only)
        for alg in cfg.algorithms:
            try:
                row.counts[alg] = count_accesses(alg, v, cfg.k if alg.uses_topk else None)
            except SoftmaxError as exc:
                log.warning("V=%d %s: access count failed: %s", v, alg.value, exc)
                row.counts[alg] = None
        if not cfg.counts_only:
            _time_row(row, cfg)
        rows.append(row)
    return rows


def _time_row(row: SweepRow, cfg: SweepConfig) -> None:
    if cfg.threads == 1:
        _time_row_with(row, cfg, None)
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            _time_row_with(row, cfg, pool)


def _time_row_with(row: SweepRow, cfg: SweepConfig, pool: ThreadPoolExecutor | None) -> None:
    xs = generate_inputs(cfg.seed, cfg.batch, row.v)
    runners = {}
    for alg in cfg.algorithms:
        try:
            runners[alg] = _batch_runner(alg, xs, cfg.k, pool)
        except SoftmaxError as exc:
            log.warning("V=%d %s: skipped: %s", row.v, alg.value, exc)
            row.throughput[alg] = None
    for _ in range(cfg.warmup):
        for run in runners.values():
            run()
    samples = {alg: [] for alg in runners}
    for _ in range(cfg.repeats):
        for alg, run in runners.items():
            t0 = time.perf_counter()
            run()
            samples[alg].append(time.perf_counter() - t0)
    for alg, ts in samples.items():
        row.throughput[alg] = cfg.batch * row.v / statistics.median(ts)


def header(algorithms: Sequence[Algorithm], timed: bool = True) -> list[str]:
    cols = ["V"]
    if timed:
        cols += [a.value for a in algorithms]
        cols += [f"{n.value}/{d.value}" for n, d in SPEEDUPS if n in algorithms and d in algorithms]
    for a in algorithms:
        cols += [f"{a.value}_{f}" for f in COUNT_FIELDS]
    return cols


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return repr(value) if isinstance(value, float) else str(value)


def row_values(row: SweepRow) -> list[str]:
    out = [str(row.v)]
    if row.timed:
        out += [_fmt(row.throughput.get(a)) for a in row.algorithms]
        out += [_fmt(row.speedup(n, d)) for n, d in row.speedup_pairs()]
    for a in row.algorithms:
        c = row.counts.get(a)
        if c is None:
            out += ["nan"] * len(COUNT_FIELDS)
        else:
            out += [str(c.loads), str(c.stores), str(c.result_stores), str(c.vector_accesses)]
    return out


def emit_csv(rows: Sequence[SweepRow], path, fmt: str = "csv") -> None:
    """Write ``rows`` with a header line, one line per vector size."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {sorted(FORMATS)}")
    if not rows:
        raise ConfigError("no rows to write")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            _write(rows, fh, fmt)
    except OSError as exc:
        raise OSError(f"cannot write sweep table to {path}: {exc}") from exc


def _write(rows: Sequence[SweepRow], fh, fmt: str) -> None:
    w = csv.writer(fh, delimiter=FORMATS[fmt], lineterminator="\n")
    w.writerow(header(rows[0].algorithms, rows[0].timed))
    for row in rows:
        w.writerow(row_values(row))


def _parse_float(s: str) -> float | None:
    return None if s == "nan" else float(s)


def parse_csv(path, fmt: str = "csv") -> list[SweepRow]:
    """Read a table written by :func:`emit_csv` back into rows."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh, delimiter=FORMATS[fmt])
        cols = next(reader)
        records = [dict(zip(cols, line)) for line in reader]
    algs = []
    for c in cols:
        if c.endswith("_loads"):
            algs.append(Algorithm(c[: -len("_loads")]))
    timed = any(a.value in cols for a in algs)
    rows = []
    for rec in records:
        row = SweepRow(v=int(rec["V"]), algorithms=tuple(algs), timed=timed)
        for a in algs:
            if timed:
                row.throughput[a] = _parse_float(rec[a.value])
            if rec[f"{a.value}_loads"] == "nan":
                row.counts[a] = None
            else:
                row.counts[a] = AccessStats(
                    int(rec[f"{a.value}_loads"]),
                    int(rec[f"{a.value}_stores"]),
                    int(rec[f"{a.value}_result_stores"]),
                )
        rows.append(row)
    return rows


def plot_data(rows: Sequence[SweepRow]) -> dict:
    series = {
        a.value: [[r.v, r.throughput.get(a)] for r in rows]
        for a in rows[0].algorithms
    }
    ratios = {
        f"{n.value}/{d.value}": [[r.v, r.speedup(n, d)] for r in rows]
        for n, d in rows[0].speedup_pairs()
    }
    return {"x": "V", "y": "elements_per_second", "series": series, "ratios": ratios}


def emit_plot_data(rows: Sequence[SweepRow], path) -> None:
    """Write per-algorithm (V, throughput) series and speedup-ratio series as JSON."""
    if not rows:
        raise ConfigError("no rows to write")
    path = Path(path)
    try:
        path.write_text(json.dumps(plot_data(rows), indent=1))
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc}") from exc


def machine_metadata(cfg: SweepConfig) -> dict:
    cfg_dict = asdict(cfg)
    cfg_dict["algorithms"] = [a.value for a in cfg.algorithms]
    return {
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor() or _cpu_model(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba.__version__,
        "config": cfg_dict,
    }


def _cpu_model() -> str:
    try:
        for line in Path("/proc/cpuinfo").read_text().splitlines():
            if line.startswith("model name"):
                return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return ""


def _parse_list(text: str, conv):
    return [conv(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="onlinesoftmax-bench",
        description="Sweep softmax / softmax+top-K kernels over vector sizes and report elements per second.",
    )
    p.add_argument("--algorithms", default=",".join(a.value for a in Algorithm),
                   help="comma-separated algorithm names (default: all six)")
    p.add_argument("--sizes", help="explicit comma-separated vector sizes; overrides --vmin/--vmax/--points")
    p.add_argument("--vmin", type=int, default=40)
    p.add_argument("--vmax", type=int, default=500_000)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output table path (default: stdout)")
    p.add_argument("--format", choices=sorted(FORMATS), default="csv")
    p.add_argument("--plot-data", help="also write plot-ready JSON series here")
    p.add_argument("--counts-only", action="store_true", help="skip timing, emit the access-count model only")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> SweepConfig:
    try:
        algorithms = [Algorithm.parse(a) for a in _parse_list(args.algorithms, str)]
        sizes = (_parse_list(args.sizes, int) if args.sizes
                 else log_sizes(args.vmin, args.vmax, args.points))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = SweepConfig(
        algorithms=algorithms,
        vector_sizes=sizes,
        batch=args.batch,
        k=args.k,
        repeats=args.repeats,
        warmup=args.warmup,
        seed=args.seed,
        threads=args.threads,
        counts_only=args.counts_only,
    )
    cfg.validate()
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = run_sweep(cfg)
    if args.out:
        emit_csv(rows, args.out, args.format)
        meta = Path(args.out).with_suffix(".meta.json")
        meta.write_text(json.dumps(machine_metadata(cfg), indent=1))
    else:
        _write(rows, sys.stdout, args.format)
    if args.plot_data:
        emit_plot_data(rows, args.plot_data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
