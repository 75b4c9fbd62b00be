import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sessc import load, run_program
from sessc.bench import (
    BenchResult, bench_one, format_params, geomean_speedup, median_ns, parse_params, read_csv,
    summary, write_csv,
)
from sessc.corpus import BENCH_DEFAULTS, NAMES


def test_median():
    assert median_ns([5, 1, 3]) == 3
    assert median_ns([4, 1, 3, 2]) == 2
    with pytest.raises(ValueError):
        median_ns([])


def test_geomean_speedup():
    rs = [BenchResult("a", "opt", "", [], 100), BenchResult("a", "naive", "", [], 200),
          BenchResult("b", "opt", "", [], 100), BenchResult("b", "naive", "", [], 50)]
    assert math.isclose(geomean_speedup(rs), 1.0)
    rs.append(BenchResult("c", "opt", "", [], None))
    rs.append(BenchResult("c", "naive", "", [], 10))
    assert math.isclose(geomean_speedup(rs), 1.0)  # timed-out rows are left out
    assert geomean_speedup(rs[:1]) is None


def test_summary_lines():
    rs = [BenchResult("queue", "opt", "n=1", [1], 1_000_000),
          BenchResult("queue-notail", "opt", "n=1", [1], 2_500_000),
          BenchResult("queue", "naive", "n=1", [1], 2_000_000),
          BenchResult("queue-notail", "naive", "n=1", [1], None)]
    lines = summary(rs)
    assert "queue-notail / queue (opt): 2.50" in lines
    assert lines[-1] == "geomean speedup naive/opt: 2.00x (reference 1.38x)"
    assert "timeout" in lines[3]


def test_params_round_trip():
    p = {"n": 20000, "seed": 1, "cap": 8}
    assert format_params(p) == "n=20000;seed=1;cap=8"
    assert parse_params(format_params(p)) == p


results = st.lists(st.builds(
    BenchResult,
    st.sampled_from(NAMES), st.sampled_from(["opt", "naive"]),
    st.sampled_from(["n=23", "n=20000;seed=1;cap=8", ""]),
    st.lists(st.integers(1, 10**12), max_size=5),
    st.one_of(st.none(), st.integers(1, 10**12)),
), max_size=6)


@given(results)
def test_csv_round_trip(rs):
    buf = io.StringIO()
    write_csv(rs, buf)
    assert read_csv(buf.getvalue()) == rs


def test_timeout_row():
    r = bench_one("fib", "opt", samples=3, params={"n": 30}, timeout=0.05)
    assert r.timed_out and r.samples == []
    buf = io.StringIO()
    write_csv([r], buf)
    assert buf.getvalue().splitlines()[1] == "fib,opt,n=30,timeout"


def test_bench_one_samples():
    r = bench_one("pingpong", "naive", samples=3, params={"n": 50})
    assert len(r.samples) == 3 and r.median == sorted(r.samples)[1]


@pytest.mark.parametrize("name", NAMES)
def test_default_workloads_are_communication_heavy(name):
    r = run_program(load(name), args=BENCH_DEFAULTS[name], check=True, tree_check=False)
    assert r.stats.channel_ops >= 10_000
