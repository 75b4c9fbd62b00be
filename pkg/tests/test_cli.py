import json

import pytest

from sessc.cli import main
from sessc.corpus import source


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_ok(capsys):
    assert run_cli(capsys, "check", "fib")[0] == 0


def test_check_reports_diagnostics(tmp_path, capsys):
    f = tmp_path / "fib.mc1"
    f.write_text(source("fib").replace("wait($c2);", ""))
    code, _, err = run_cli(capsys, "check", str(f))
    assert code == 1
    assert "error: Unconsumed($c2)" in err
    assert err.startswith(f"{f}:")


def test_check_missing_file(capsys):
    code, _, err = run_cli(capsys, "check", "/nonexistent/x.mc1")
    assert code == 2 and "error" in err


def test_widths(capsys):
    _, out, _ = run_cli(capsys, "widths", "atm")
    assert "atm: 2, toProvider" in out.splitlines()
    _, out, _ = run_cli(capsys, "widths", "queue")
    assert any(line.startswith("queue: unbounded") for line in out.splitlines())
    _, out, _ = run_cli(capsys, "widths", "fib")
    assert any(line.startswith("<!int;>: 2, toClient @") for line in out.splitlines())


def test_run_fib(capsys):
    code, out, _ = run_cli(capsys, "run", "fib")
    assert code == 0
    assert out.splitlines() == ["55", "exit value: 55"]


def test_run_backends_agree(capsys):
    _, opt, _ = run_cli(capsys, "run", "queue", "--runtime", "opt", "--seed", "7")
    _, naive, _ = run_cli(capsys, "run", "queue", "--runtime", "naive", "--seed", "7")
    assert opt == naive


def test_run_with_invariants(capsys):
    code, _, err = run_cli(capsys, "run", "queue", "--assert-invariants")
    assert code == 0 and "0 violations" in err


def test_run_params_and_threads(capsys, monkeypatch):
    monkeypatch.setenv("SESSC_THREADS", "4")
    code, out, _ = run_cli(capsys, "run", "fib", "--param", "n=12")
    assert code == 0 and out.splitlines()[0] == "144"


def test_config_selects_backend(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"runtime": {"backend": "naive"}}))
    code, out, _ = run_cli(capsys, "run", "pingpong", "--config", str(cfg), "--assert-invariants")
    assert code == 0 and out.endswith("\n")


def test_panic_exit_code(tmp_path, capsys):
    f = tmp_path / "div.mc1"
    f.write_text("int main(int z) { return 1 / z; }")
    code, _, err = run_cli(capsys, "run", str(f))
    assert code == 3 and "panic [arithmetic]" in err


def test_unknown_param(capsys):
    code, _, err = run_cli(capsys, "run", "fib", "--param", "size=3")
    assert code == 2


def test_bad_param_syntax(capsys):
    with pytest.raises(SystemExit):
        main(["run", "fib", "--param", "n"])


def test_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, stdout, _ = run_cli(capsys, "bench", "--samples", "2", "--programs", "atm,pingpong", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "program,backend,param,sample_ns_1,sample_ns_2,median_ns"
    assert len(lines) == 5
    assert "geomean speedup naive/opt" in stdout and "reference 1.38x" in stdout


def test_bench_unknown_program(capsys):
    assert run_cli(capsys, "bench", "--programs", "nope")[0] == 2
