"""Benchmark harness: median wall time per (program, backend), CSV out."""
from __future__ import annotations

import csv
import gc
import io
import statistics
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import corpus
from .interpreter import compile_program
from .scheduler import Timeout, run_program

REFERENCE_SPEEDUP = 1.38  # published naive/optimised ratio for the original runtimes
TIMEOUT = "timeout"


@dataclass
class BenchResult:
    program: str
    backend: str
    param: str  # e.g. "n=23" or "n=20000;seed=1;cap=8"
    samples: list = field(default_factory=list)  # wall times in ns
    median: Optional[int] = None  # None when the row timed out

    @property
    def timed_out(self) -> bool:
        return self.median is None

    def row(self, width: int) -> list:
        cells = [str(s) for s in self.samples] + [""] * (width - len(self.samples))
        return [self.program, self.backend, self.param] + cells + [TIMEOUT if self.timed_out else str(self.median)]


def format_params(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in params.items())


def parse_params(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(";")):
        k, _, v = part.partition("=")
        out[k] = int(v)
    return out


def median_ns(samples: list) -> int:
    if not samples:
        raise ValueError("no samples")
    return int(statistics.median(samples))


def geomean_speedup(results: Iterable[BenchResult], base: str = "naive", fast: str = "opt") -> Optional[float]:
    """Geometric mean over programs of median(base) / median(fast); None if no program has both."""
    by = {(r.program, r.backend): r for r in results}
    ratios = []
    for (program, backend), r in by.items():
        if backend != fast:
            continue
        other = by.get((program, base))
        if other is None or r.timed_out or other.timed_out:
            continue
        ratios.append(other.median / r.median)
    if not ratios:
        return None
    return statistics.geometric_mean(ratios)


def _time_once(image, backend: str, seed: int, params: dict, pool_size: int,
               timeout: Optional[float]) -> int:
    """Wall time of one run in ns.

    The cyclic collector stays on: the naive backend allocates more objects
    per channel, and the collection work that causes is part of its cost.
    """
    gc.collect()
    start = time.perf_counter_ns()
    run_program(image, backend, seed=seed, pool_size=pool_size, args=params, timeout=timeout)
    return time.perf_counter_ns() - start


def _bench_program(program: str, backends: list, samples: int, params: Optional[dict],
                   timeout: Optional[float], pool_size: int, image=None) -> list:
    """One row per backend.  Samples alternate between backends so drift hits all of them alike."""
    params = dict(corpus.BENCH_DEFAULTS.get(program, {}) if params is None else params)
    if image is None:
        image = compile_program(corpus.load(program))
    rows = {b: BenchResult(program, b, format_params(params)) for b in backends}
    spent = {b: 0.0 for b in backends}  # seconds charged to each row
    live = list(backends)
    for i in range(samples):
        for b in list(live):
            left = None if timeout is None else timeout - spent[b]
            start = time.monotonic()
            try:
                if left is not None and left <= 0:
                    raise Timeout("row time limit reached")
                rows[b].samples.append(_time_once(image, b, i, params, pool_size, left))
                spent[b] += time.monotonic() - start
            except Timeout:
                rows[b].samples = []
                live.remove(b)
    for b in live:
        rows[b].median = median_ns(rows[b].samples)
    return [rows[b] for b in backends]


def bench_one(program: str, backend: str, samples: int, params: Optional[dict] = None,
              timeout: Optional[float] = None, pool_size: int = 1, image=None) -> BenchResult:
    """Time ``samples`` runs (seed = sample index); compilation is not timed."""
    return _bench_program(program, [backend], samples, params, timeout, pool_size, image)[0]


def run_bench(programs: Iterable[str] = corpus.NAMES, backends: Iterable[str] = ("opt", "naive"),
              samples: int = 20, timeout: Optional[float] = None, pool_size: int = 1,
              params: Optional[dict] = None, progress=None) -> list:
    """Benchmark every (program, backend) pair; ``params`` maps program -> parameter dict."""
    results = []
    for program in programs:
        rows = _bench_program(program, list(backends), samples, (params or {}).get(program),
                              timeout, pool_size)
        for r in rows:
            results.append(r)
            if progress is not None:
                progress(r)
    return results


def write_csv(results: list, out) -> None:
    width = max((len(r.samples) for r in results), default=0)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["program", "backend", "param"] + [f"sample_ns_{i + 1}" for i in range(width)] + ["median_ns"])
    for r in results:
        w.writerow(r.row(width))


def read_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    results = []
    for row in rows[1:]:
        program, backend, param, *rest = row
        median = rest[-1]
        samples = [int(x) for x in rest[:-1] if x]
        results.append(BenchResult(program, backend, param, samples, None if median == TIMEOUT else int(median)))
    return results


def summary(results: list) -> list:
    lines = []
    by = {(r.program, r.backend): r for r in results}
    for r in results:
        shown = "timeout" if r.timed_out else f"{r.median / 1e6:.1f} ms"
        lines.append(f"{r.program:<13} {r.backend:<6} {r.param:<24} median {shown}")
    for backend in sorted({r.backend for r in results}):
        a, b = by.get(("queue", backend)), by.get(("queue-notail", backend))
        if a and b and not (a.timed_out or b.timed_out):
            lines.append(f"queue-notail / queue ({backend}): {b.median / a.median:.2f}")
    g = geomean_speedup(results)
    if g is not None:
        lines.append(f"geomean speedup naive/opt: {g:.2f}x (reference {REFERENCE_SPEEDUP:.2f}x)")
    return lines
