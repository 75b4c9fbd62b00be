"""Multiplex processes over a small pool of executors.

Every scheduling decision draws from one seeded random generator: which
ready process runs next, and for how many operations before it is
preempted.  With a single executor the whole run is reproducible from the
seed.  With more executors the same generator is shared under the scheduler
lock and the host thread scheduler adds its own interleavings.
"""
from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .interpreter import BLOCK, TERMINATE, Frame, Image, Process, compile_program
from .runtime.core import TO_CLIENT, Backend, RuntimePanic, Stats, TreeShapeViolation, make_backend
from .typechecker import AnnotatedProgram

READY, RUNNING, BLOCKED, DONE = 0, 1, 2, 3

MAX_QUANTUM = 64


class Deadlock(RuntimePanic):
    invariant = "deadlock"


class Timeout(RuntimePanic):
    invariant = "timeout"


class LeakError(RuntimePanic):
    invariant = "termination"


@dataclass
class RunResult:
    value: object
    output: list
    backend: str
    max_frame_depth: int
    processes: int
    stats: Optional[Stats] = None
    frame_depths: dict = field(default_factory=dict)  # function name of each process -> max depth

    @property
    def channel_ops(self) -> int:
        return self.stats.channel_ops if self.stats is not None else -1


class Scheduler:
    def __init__(self, backend: Backend, seed: int = 0, pool_size: int = 1,
                 timeout: Optional[float] = None, check_tree: bool = False,
                 max_quantum: int = MAX_QUANTUM):
        self.backend = backend
        self.rng = random.Random(seed)
        self.pool_size = max(1, pool_size)
        self.deadline = None if timeout is None else time.monotonic() + timeout
        self.check_tree = check_tree
        self.max_quantum = max_quantum
        self.ready: list = []
        self.live: set = set()
        self.spawned = 0
        self.output: list = []
        self.main: Optional[Process] = None
        self.running = 0
        self.failure: Optional[BaseException] = None
        self.cond = threading.Condition(threading.Lock()) if self.pool_size > 1 else None
        self.frame_depths: dict = {}

    # -- process management -------------------------------------------------

    def spawn(self, code, env: dict, parent: Optional[Process]) -> Process:
        self.spawned += 1
        proc = Process(self.spawned, Frame(code, env), self, parent)
        if self.cond is None:
            self.live.add(proc)
            self.ready.append(proc)
        else:
            with self.cond:
                self.live.add(proc)
                self.ready.append(proc)
                self.cond.notify()
        return proc

    def make_ready(self, proc: Process) -> None:
        if self.cond is None:
            if proc.state == BLOCKED:
                proc.state = READY
                self.ready.append(proc)
            elif proc.state == RUNNING:
                proc.woken = True
            return
        with self.cond:
            if proc.state == BLOCKED:
                proc.state = READY
                self.ready.append(proc)
                self.cond.notify()
            elif proc.state == RUNNING:
                proc.woken = True

    def _pick(self) -> Process:
        ready = self.ready
        i = int(self.rng.random() * len(ready))
        proc = ready[i]
        ready[i] = ready[-1]
        ready.pop()
        return proc

    def _settle(self, proc: Process, status: int) -> None:
        """Record the outcome of a slice; caller holds the lock if there is one."""
        if status == BLOCK:
            if proc.woken:
                proc.woken = False
                proc.state = READY
                self.ready.append(proc)
            else:
                proc.state = BLOCKED
        elif status == TERMINATE:
            proc.state = DONE
            self.live.discard(proc)
            name = proc.frame.code.name
            self.frame_depths[name] = max(self.frame_depths.get(name, 0), proc.max_depth)
        else:
            proc.woken = False
            proc.state = READY
            self.ready.append(proc)

    # -- driving ------------------------------------------------------------

    def run(self, main: Process) -> None:
        self.main = main
        if self.pool_size == 1:
            self._run_serial()
        else:
            self._run_pool()
        if self.failure is not None:
            raise self.failure

    def _run_serial(self) -> None:
        rng = self.rng
        q = self.max_quantum
        deadline = self.deadline
        while self.ready:
            proc = self._pick()
            proc.state = RUNNING
            self._settle(proc, proc.run(1 + int(rng.random() * q)))
            if deadline is not None and time.monotonic() > deadline:
                raise Timeout("run exceeded its time limit")
            if self.check_tree:
                check_tree(self)
        self._finish()

    def _run_pool(self) -> None:
        workers = [threading.Thread(target=self._worker, daemon=True) for _ in range(self.pool_size)]
        for w in workers:
            w.start()
        for w in workers:
            w.join()
        if self.failure is None:
            self._finish()

    def _worker(self) -> None:
        cond = self.cond
        q = self.max_quantum
        while True:
            with cond:
                while not self.ready and self.failure is None:
                    if self.running == 0:
                        cond.notify_all()
                        return
                    cond.wait()
                if self.failure is not None:
                    return
                if self.deadline is not None and time.monotonic() > self.deadline:
                    self.failure = Timeout("run exceeded its time limit")
                    cond.notify_all()
                    return
                proc = self._pick()
                proc.state = RUNNING
                self.running += 1
                budget = 1 + int(self.rng.random() * q)
            try:
                status = proc.run(budget)
            except BaseException as exc:  # surfaces in run()
                with cond:
                    self.failure = exc
                    self.running -= 1
                    cond.notify_all()
                return
            with cond:
                self.running -= 1
                self._settle(proc, status)
                if self.ready or self.running == 0:
                    cond.notify_all()

    def _finish(self) -> None:
        if not self.main.finished:
            blocked = sorted(self.live, key=lambda p: p.pid)
            raise Deadlock("no process can make progress; blocked: "
                           + ", ".join(repr(p) for p in blocked))
        stats = self.backend.stats
        if stats is not None:
            if self.live:
                raise LeakError(f"{len(self.live)} process(es) still alive at exit")
            if stats.live:
                raise LeakError(f"{len(stats.live)} channel(s) not retired at exit")


# ---------------------------------------------------------------------------
# Process-tree shape

def _owner(ep):
    """The process holding ``ep``, resolving endpoints still in flight inside a buffer."""
    h = ep.holder
    hops = 0
    while isinstance(h, tuple):
        _, ch, d = h
        h = (ch.client if d is TO_CLIENT else ch.provider).holder
        hops += 1
        if hops > 10_000:
            raise TreeShapeViolation("cycle of in-flight endpoints")
    return h


def check_tree(sched: Scheduler) -> None:
    """Client/provider links between live processes must form a tree rooted at main."""
    stats = sched.backend.stats
    parent: dict = {}
    for ch in list(stats.live.values()):
        if ch.sealed:
            continue  # a forward is in flight; the adopting side owns the link
        provider = _owner(ch.provider)
        client = _owner(ch.client)
        if provider is None or provider.finished:
            continue  # closed; the DONE message is waiting for its client
        if client is None or client.finished:
            raise TreeShapeViolation(f"ch{ch.cid}: client gone while {provider!r} still provides")
        if provider is sched.main:
            raise TreeShapeViolation(f"main provides ch{ch.cid}")
        if provider in parent:
            raise TreeShapeViolation(f"{provider!r} provides two channels")
        parent[provider] = client
    for proc in sched.live:
        seen = set()
        p = proc
        while p is not sched.main:
            if p in seen:
                raise TreeShapeViolation(f"cycle through {p!r}")
            seen.add(p)
            if p not in parent:
                raise TreeShapeViolation(f"{p!r} has no client")
            p = parent[p]
    stats.count("process-tree")


# ---------------------------------------------------------------------------
# Entry point

def main_args(ann: AnnotatedProgram, values: Optional[dict]) -> dict:
    """Bind main's parameters from ``values``; missing ints default to 0, bools to false."""
    main = ann.program.function(ann.program.entry)
    values = dict(values or {})
    env = {}
    for p in main.params:
        v = values.pop(p.name, 0 if p.type == "int" else False)
        if p.type == "bool" and not isinstance(v, bool):
            v = bool(v)
        env[p.name] = v
    if values:
        raise ValueError(f"main has no parameter(s) {', '.join(sorted(values))}")
    return env


def run_program(program, backend="opt", seed: int = 0, pool_size: int = 1,
                args: Optional[dict] = None, check: bool = False,
                timeout: Optional[float] = None, tree_check: Optional[bool] = None) -> RunResult:
    """Run ``program`` (an AnnotatedProgram or a compiled Image) to completion."""
    image = program if isinstance(program, Image) else compile_program(program, check)
    if check and not image.check:
        image = compile_program(image.annotated, True)
    if isinstance(backend, str):
        backend = make_backend(backend, check)
    if tree_check is None:
        tree_check = check and pool_size == 1
    sched = Scheduler(backend, seed, pool_size, timeout, check_tree=tree_check)
    main = sched.spawn(image.main, main_args(image.annotated, args), None)
    sched.run(main)
    return RunResult(main.result, sched.output, backend.name,
                     max(sched.frame_depths.values(), default=1), sched.spawned,
                     backend.stats, dict(sched.frame_depths))
