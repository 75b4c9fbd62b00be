"""sessc: check, inspect, run and benchmark MiniCC0 programs."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from . import bench, corpus
from .diagnostics import CompileError
from .parser import parse
from .runtime.core import RuntimePanic
from .scheduler import run_program
from .session_types import TO_PROVIDER, Chan, ChoiceRef, SessionType, initial_direction, width_of
from .typechecker import check_program
from . import syntax as ast


def _resolve_file(name: str) -> Path:
    p = Path(name)
    if not p.exists() and name in corpus.NAMES:
        return corpus.path(name)
    return p


def _load(name: str):
    """(path, annotated program) or an exit code after reporting the problem."""
    path = _resolve_file(name)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"{name}: error: {exc.strerror or exc}", file=sys.stderr)
        return path, 2
    try:
        return path, check_program(parse(text))
    except CompileError as exc:
        for d in exc.diagnostics:
            print(d.render(str(name)), file=sys.stderr)
        return path, 1


# -- widths -------------------------------------------------------------------

def _choice_refs(t: SessionType):
    for step in t.steps:
        if isinstance(step.payload, Chan):
            yield from _choice_refs(step.payload.session)
    if isinstance(t.tail, ChoiceRef):
        yield t.tail


def _session_types(program: ast.Program):
    for c in program.choices:
        yield from c.branches.values()
    for f in program.functions:
        if f.provided is not None:
            yield f.provided[0]
        for p in f.params:
            if p.is_chan:
                yield p.type
        for node in ast.walk(f.body):
            if isinstance(node, ast.ChanDecl):
                yield node.session
            elif isinstance(node, ast.Recv) and isinstance(node.type, SessionType):
                yield node.type


def width_rows(ann) -> list:
    """Rows for every declared choice, then every spawn site in source order."""
    program, env = ann.program, ann.env
    polarity = {}
    for t in _session_types(program):
        for ref in _choice_refs(t):
            polarity.setdefault(ref.name, ref.polarity)
    rows = []
    for c in program.choices:
        t = SessionType((), ChoiceRef(c.name, polarity.get(c.name, TO_PROVIDER)))
        rows.append(f"{c.name}: {width_of(env, t)}, {initial_direction(env, t)}")
    sites = []
    for f in program.functions:
        for node in ast.walk(f.body):
            if isinstance(node, ast.ChanDecl) and node.nid in ann.spawns:
                sites.append(node)
    for node in sorted(sites, key=lambda n: (n.loc.line, n.loc.col)):
        info = ann.spawns[node.nid]
        rows.append(f"{info.session}: {info.width}, {info.direction} @{node.loc.line}:{node.loc.col}")
    return rows


# -- commands -----------------------------------------------------------------

def cmd_check(args) -> int:
    _, ann = _load(args.file)
    if isinstance(ann, int):
        return ann
    return 0


def cmd_widths(args) -> int:
    _, ann = _load(args.file)
    if isinstance(ann, int):
        return ann
    for row in width_rows(ann):
        print(row)
    return 0


def _parse_param(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    v = value.strip().lower()
    if v in ("true", "false"):
        return name, v == "true"
    try:
        return name, int(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: not an int or bool: {value!r}") from None


def _config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _threads(value: Optional[int]) -> int:
    if value is not None:
        return value
    return int(os.environ.get("SESSC_THREADS", "1"))


def cmd_run(args) -> int:
    path, ann = _load(args.file)
    if isinstance(ann, int):
        return ann
    try:
        config = _config(args.config)
    except (OSError, ValueError) as exc:
        print(f"{args.config}: error: {exc}", file=sys.stderr)
        return 2
    backend = args.runtime or config.get("runtime", {}).get("backend", "opt")
    params = dict(corpus.RUN_DEFAULTS.get(path.stem, {}))
    main = ann.program.function(ann.program.entry)
    known = {p.name for p in main.params}
    params = {k: v for k, v in params.items() if k in known}
    params.update(dict(args.param))
    try:
        result = run_program(ann, backend, seed=args.seed, pool_size=_threads(args.threads),
                             args=params, check=args.assert_invariants, timeout=args.timeout)
    except RuntimePanic as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in result.output:
        print(line)
    if result.value is not None:
        print(f"exit value: {_show(result.value)}")
    if args.assert_invariants and result.stats is not None:
        checks = ", ".join(f"{k} {v}" for k, v in result.stats.checks.items())
        print(f"invariants: 0 violations ({checks})", file=sys.stderr)
    return 0


def _show(v) -> str:
    return ("true" if v else "false") if isinstance(v, bool) else str(v)


def cmd_bench(args) -> int:
    programs = args.programs.split(",") if args.programs else list(corpus.NAMES)
    backends = args.backends.split(",")
    unknown = [p for p in programs if p not in corpus.NAMES]
    if unknown:
        print(f"error: unknown program(s) {', '.join(unknown)}", file=sys.stderr)
        return 2

    def progress(r):
        shown = "timeout" if r.timed_out else f"{r.median / 1e6:.1f} ms"
        print(f"  {r.program} [{r.backend}] {shown}", file=sys.stderr)

    results = bench.run_bench(programs, backends, args.samples, args.timeout, _threads(args.threads),
                              progress=progress)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench.write_csv(results, fh)
    else:
        bench.write_csv(results, sys.stdout)
    for line in bench.summary(results):
        print(line, file=sys.stderr if not args.out else sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sessc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and type-check a program")
    p.add_argument("file", help="source file, or the name of a bundled program")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("widths", help="print inferred buffer widths")
    p.add_argument("file")
    p.set_defaults(func=cmd_widths)

    p = sub.add_parser("run", help="run a program")
    p.add_argument("file")
    p.add_argument("--runtime", choices=("opt", "naive"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="executor pool size (default $SESSC_THREADS or 1)")
    p.add_argument("--assert-invariants", action="store_true")
    p.add_argument("--param", type=_parse_param, action="append", default=[], metavar="NAME=VALUE",
                   help="argument for main")
    p.add_argument("--config", help="JSON file; runtime.backend selects the backend")
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time the bundled programs on each backend")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--programs", help="comma-separated subset of " + ",".join(corpus.NAMES))
    p.add_argument("--backends", default="opt,naive")
    p.add_argument("--timeout", type=float, default=120.0, help="per-row limit in seconds")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
