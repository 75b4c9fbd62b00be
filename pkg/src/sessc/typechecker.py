"""Session fidelity and linearity checking.

A single walk over each function body simulates the remaining session type
of every live channel.  Along the way it records the flow direction of every
communication, the width and initial direction of every spawn, and which
calls are tail calls.  The interpreter relies only on these annotations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import syntax as ast
from .diagnostics import CompileError, Diagnostic, Loc
from .session_types import (
    TO_CLIENT, Chan, ChoiceRef, Direction, Role, SessionType, UnknownChoice,
    Width, initial_direction, next_direction, types_equal, validate, width_of,
)

FIDELITY_KINDS = {"WrongOrder", "PayloadMismatch", "MissingCase", "ExtraCase", "ActionAfterEnd",
                  "UnknownLabel"}
LINEARITY_KINDS = {"Unconsumed", "UseAfterConsume", "DuplicateUse", "JoinMismatch"}
FORWARD_KINDS = {"ForwardTypeMismatch", "ForwardRoleError"}
TAIL_KINDS = {"TailPositionError"}

BUILTINS = {"print"}


@dataclass(frozen=True)
class ChannelState:
    name: str
    remaining: SessionType
    role: Role

    def sends(self, d: Direction) -> bool:
        """Whether the holder of this end is the one sending a message flowing in ``d``."""
        return (d is TO_CLIENT) == (self.role is Role.PROVIDER)


@dataclass(frozen=True)
class SpawnInfo:
    session: SessionType
    width: Width
    direction: Direction


@dataclass
class AnnotatedProgram:
    program: ast.Program
    env: dict
    directions: dict = field(default_factory=dict)     # op nid -> Direction
    payload_kinds: dict = field(default_factory=dict)  # Send/Recv nid -> 'int' | 'bool' | 'chan'
    spawns: dict = field(default_factory=dict)         # ChanDecl nid -> SpawnInfo
    tail_calls: set = field(default_factory=set)       # TailCall nids


def _next_action(t: SessionType) -> str:
    if t.steps:
        return str(t.steps[0]).rstrip(";")
    if isinstance(t.tail, ChoiceRef):
        return str(t.tail)
    return "end of session"


class _FunctionChecker:
    def __init__(self, checker: "_ProgramChecker", f: ast.FunctionDecl):
        self.pc = checker
        self.env = checker.env
        self.f = f
        self.scopes: list = [{}]
        self.consumed: set = set()

    # -- reporting ----------------------------------------------------------

    def error(self, kind: str, loc: Loc, message: str) -> None:
        self.pc.diags.append(Diagnostic(kind, loc, message))

    # -- value scopes -------------------------------------------------------

    def lookup_var(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare_var(self, name: str, ty: str, loc: Loc) -> None:
        if self.lookup_var(name) is not None:
            self.error("Redeclaration", loc, f"variable '{name}' is already declared")
        self.scopes[-1][name] = ty

    # -- channels -----------------------------------------------------------

    def use(self, ctx: dict, name: str, loc: Loc) -> Optional[ChannelState]:
        st = ctx.get(name)
        if st is None:
            if name in self.consumed:
                self.error("UseAfterConsume", loc, f"UseAfterConsume(${name}): channel was already consumed")
            else:
                self.error("UnknownChannel", loc, f"unknown channel ${name}")
        return st

    def consume(self, ctx: dict, name: str) -> None:
        ctx.pop(name, None)
        self.consumed.add(name)

    def bind(self, ctx: dict, name: str, remaining: SessionType, role: Role, loc: Loc) -> None:
        if name in ctx:
            self.error("DuplicateUse", loc, f"DuplicateUse(${name}): channel ${name} is still live")
        ctx[name] = ChannelState(name, remaining, role)
        self.consumed.discard(name)

    def leftover(self, ctx: dict, keep: tuple, loc: Loc) -> None:
        for name in sorted(ctx):
            if name not in keep:
                self.error("Unconsumed", loc, f"Unconsumed(${name}): channel ${name} is still live")

    # -- expressions --------------------------------------------------------

    def expr(self, e, ctx: dict) -> Optional[str]:
        """Type of a value expression ('int' | 'bool'), consuming channels passed to calls."""
        if isinstance(e, ast.IntLit):
            return "int"
        if isinstance(e, ast.BoolLit):
            return "bool"
        if isinstance(e, ast.Var):
            ty = self.lookup_var(e.name)
            if ty is None:
                self.error("UnknownVariable", e.loc, f"unknown variable '{e.name}'")
            return ty
        if isinstance(e, ast.ChanVar):
            self.error("TypeMismatch", e.loc, f"channel ${e.name} cannot be used as a value here")
            return None
        if isinstance(e, ast.Unary):
            want = "int" if e.op == "-" else "bool"
            t = self.expr(e.operand, ctx)
            if t is not None and t != want:
                self.error("TypeMismatch", e.loc, f"operator '{e.op}' expects {want}, found {t}")
            return want
        if isinstance(e, ast.Binary):
            lt = self.expr(e.left, ctx)
            rt = self.expr(e.right, ctx)
            if e.op in ("+", "-", "*", "/", "%", "<", "<="):
                for t, side in ((lt, e.left), (rt, e.right)):
                    if t is not None and t != "int":
                        self.error("TypeMismatch", side.loc, f"operator '{e.op}' expects int, found {t}")
                return "bool" if e.op in ("<", "<=") else "int"
            if e.op in ("&&", "||"):
                for t, side in ((lt, e.left), (rt, e.right)):
                    if t is not None and t != "bool":
                        self.error("TypeMismatch", side.loc, f"operator '{e.op}' expects bool, found {t}")
                return "bool"
            if lt is not None and rt is not None and lt != rt:
                self.error("TypeMismatch", e.loc, f"cannot compare {lt} with {rt}")
            return "bool"
        if isinstance(e, ast.Call):
            return self.call(e, ctx)
        if isinstance(e, ast.Spawn):
            self.error("TypeMismatch", e.loc,
                       f"spawning call {e.fn}(...) must initialise a channel variable")
            return None
        raise TypeError(e)

    def call(self, e: ast.Call, ctx: dict) -> Optional[str]:
        if e.fn == "print":
            if len(e.args) != 1:
                self.error("ArityMismatch", e.loc, "print takes one argument")
                return "void"
            t = self.expr(e.args[0], ctx)
            if t is not None and t != "int":
                self.error("TypeMismatch", e.loc, f"print expects int, found {t}")
            return "void"
        callee = self.pc.functions.get(e.fn)
        if callee is None:
            self.error("UnknownFunction", e.loc, f"unknown function '{e.fn}'")
            return None
        self.args(callee, e.args, ctx, e.loc)
        return callee.ret

    def args(self, callee: ast.FunctionDecl, args: list, ctx: dict, loc: Loc) -> None:
        if len(args) != len(callee.params):
            self.error("ArityMismatch", loc,
                       f"{callee.name} expects {len(callee.params)} arguments, got {len(args)}")
            return
        passed = set()
        for p, a in zip(callee.params, args):
            if not p.is_chan:
                t = self.expr(a, ctx)
                if t is not None and t != p.type:
                    self.error("TypeMismatch", a.loc, f"argument '{p.name}' of {callee.name} expects "
                                                      f"{p.type}, found {t}")
                continue
            if not isinstance(a, ast.ChanVar):
                self.error("TypeMismatch", a.loc, f"argument ${p.name} of {callee.name} must be a channel")
                continue
            if a.name in passed:
                self.error("DuplicateUse", a.loc, f"DuplicateUse(${a.name}): channel passed twice")
                continue
            st = self.use(ctx, a.name, a.loc)
            if st is None:
                continue
            passed.add(a.name)
            if st.role is not Role.CLIENT:
                self.error("WrongOrder", a.loc, f"provided channel ${a.name} cannot be passed to {callee.name}")
            elif not types_equal(self.env, st.remaining, p.type):
                self.error("PayloadMismatch", a.loc, f"channel ${a.name} has type {st.remaining} but "
                                                     f"{callee.name} expects {p.type}")
            self.consume(ctx, a.name)

    # -- statements ---------------------------------------------------------

    def block(self, b: ast.Block, ctx: Optional[dict]) -> Optional[dict]:
        self.scopes.append({})
        terminator = None
        for s in b.stmts:
            if ctx is None:
                if isinstance(terminator, ast.TailCall):
                    self.error("TailPositionError", terminator.loc,
                               f"call to {terminator.fn} re-provides ${terminator.chan} but is not in tail position")
                else:
                    self.error("UnreachableCode", s.loc, "statement follows the end of this process")
                break
            ctx = self.stmt(s, ctx)
            if ctx is None:
                terminator = s
        self.scopes.pop()
        return ctx

    def join(self, a: Optional[dict], b: Optional[dict], loc: Loc, what: str) -> Optional[dict]:
        if a is None:
            return b
        if b is None:
            return a
        if a != b:
            names = sorted(set(a) ^ set(b)) or sorted(n for n in a if a[n] != b.get(n))
            detail = ", ".join("$" + n for n in names)
            self.error("JoinMismatch", loc, f"JoinMismatch: channels {detail} differ between {what}")
        return a

    def stmt(self, s, ctx: dict) -> Optional[dict]:
        method = getattr(self, "stmt_" + type(s).__name__)
        return method(s, ctx)

    def stmt_Block(self, s: ast.Block, ctx):
        return self.block(s, ctx)

    def stmt_VarDecl(self, s: ast.VarDecl, ctx):
        if s.init is not None:
            t = self.expr(s.init, ctx)
            if t is not None and t != s.type:
                self.error("TypeMismatch", s.loc, f"cannot initialise {s.type} '{s.name}' with {t}")
        self.declare_var(s.name, s.type, s.loc)
        return ctx

    def stmt_Assign(self, s: ast.Assign, ctx):
        ty = self.lookup_var(s.name)
        t = self.expr(s.expr, ctx)
        if ty is None:
            self.error("UnknownVariable", s.loc, f"unknown variable '{s.name}'")
        elif t is not None and t != ty:
            self.error("TypeMismatch", s.loc, f"cannot assign {t} to {ty} '{s.name}'")
        return ctx

    def stmt_ExprStmt(self, s: ast.ExprStmt, ctx):
        if not isinstance(s.expr, ast.Call):
            self.error("TypeMismatch", s.loc, "expression statement must be a function call")
        self.expr(s.expr, ctx)
        return ctx

    def stmt_ChanDecl(self, s: ast.ChanDecl, ctx):
        if not self.valid_type(s.session, s.loc):
            return ctx
        if not isinstance(s.init, ast.Spawn):
            self.error("TypeMismatch", s.loc, f"channel ${s.name} must be initialised by a spawning function")
            if isinstance(s.init, ast.Call):
                self.call(s.init, ctx)
            return ctx
        callee = self.pc.functions[s.init.fn]
        self.args(callee, s.init.args, ctx, s.init.loc)
        provided = callee.provided[0]
        if not types_equal(self.env, s.session, provided):
            self.error("TypeMismatch", s.loc, f"{s.init.fn} provides {provided}, not {s.session}")
        self.bind(ctx, s.name, s.session, Role.CLIENT, s.loc)
        self.pc.annotate_spawn(s.nid, s.session)
        return ctx

    def expect_transmit(self, st: ChannelState, outgoing: bool, loc: Loc):
        t = st.remaining
        verb = "send on" if outgoing else "receive from"
        if t.is_end:
            self.error("ActionAfterEnd", loc, f"ActionAfterEnd: cannot {verb} ${st.name}, its session has ended")
            return None
        if not t.steps:
            self.error("WrongOrder", loc, f"WrongOrder: cannot {verb} ${st.name}, expected {t.tail}")
            return None
        step = t.steps[0]
        if st.sends(step.dir) != outgoing:
            need = "send" if st.sends(step.dir) else "receive"
            self.error("WrongOrder", loc, f"WrongOrder: ${st.name} must {need} next "
                                          f"({st.role.value} at {t})")
            return None
        return step

    def stmt_Send(self, s: ast.Send, ctx):
        st = self.use(ctx, s.chan, s.loc)
        if st is None:
            return ctx
        step = self.expect_transmit(st, True, s.loc)
        if step is None:
            if isinstance(s.expr, ast.ChanVar):
                self.consume(ctx, s.expr.name)
            else:
                self.expr(s.expr, ctx)
            return ctx
        if isinstance(step.payload, Chan):
            kind = "chan"
            if not isinstance(s.expr, ast.ChanVar):
                self.error("PayloadMismatch", s.loc, f"payload mismatch: ${s.chan} expects a channel "
                                                     f"{step.payload.session}")
                self.expr(s.expr, ctx)
            elif s.expr.name == s.chan:
                self.error("DuplicateUse", s.loc, f"DuplicateUse(${s.chan}): channel sent along itself")
            else:
                d = self.use(ctx, s.expr.name, s.expr.loc)
                if d is not None:
                    if d.role is not Role.CLIENT:
                        self.error("PayloadMismatch", s.loc, f"payload mismatch: provided channel "
                                                             f"${d.name} cannot be sent")
                    elif not types_equal(self.env, d.remaining, step.payload.session):
                        self.error("PayloadMismatch", s.loc, f"payload mismatch: ${d.name} has type "
                                                             f"{d.remaining}, expected {step.payload.session}")
                    self.consume(ctx, d.name)
        else:
            kind = step.payload.name
            if isinstance(s.expr, ast.ChanVar):
                self.error("PayloadMismatch", s.loc, f"payload mismatch: ${s.chan} expects {kind}, "
                                                     f"found channel ${s.expr.name}")
                self.use(ctx, s.expr.name, s.expr.loc)
                self.consume(ctx, s.expr.name)
            else:
                t = self.expr(s.expr, ctx)
                if t is not None and t != kind:
                    self.error("PayloadMismatch", s.loc, f"payload mismatch: ${s.chan} expects {kind}, found {t}")
        self.pc.record(s.nid, step.dir, kind)
        ctx[s.chan] = ChannelState(st.name, st.remaining.advance(), st.role)
        return ctx

    def stmt_Recv(self, s: ast.Recv, ctx):
        st = self.use(ctx, s.chan, s.loc)
        step = None if st is None else self.expect_transmit(st, False, s.loc)
        if step is None:
            if isinstance(s.type, SessionType):
                self.bind(ctx, s.var, s.type, Role.CLIENT, s.loc)
            else:
                self.declare_var(s.var, s.type, s.loc)
            return ctx
        ctx[s.chan] = ChannelState(st.name, st.remaining.advance(), st.role)
        if isinstance(step.payload, Chan):
            kind = "chan"
            if not (isinstance(s.type, SessionType) and types_equal(self.env, s.type, step.payload.session)):
                self.error("PayloadMismatch", s.loc, f"payload mismatch: ${s.chan} carries a channel "
                                                     f"{step.payload.session}, not {s.type}")
            self.bind(ctx, s.var, step.payload.session, Role.CLIENT, s.loc)
        else:
            kind = step.payload.name
            if s.type != kind:
                self.error("PayloadMismatch", s.loc, f"payload mismatch: ${s.chan} carries {kind}, "
                                                     f"not {s.type}")
            if isinstance(s.type, SessionType):
                self.bind(ctx, s.var, s.type, Role.CLIENT, s.loc)
            else:
                self.declare_var(s.var, s.type, s.loc)
        self.pc.record(s.nid, step.dir, kind)
        return ctx

    def expect_choice(self, st: ChannelState, outgoing: bool, loc: Loc):
        t = st.remaining
        verb = "send a label on" if outgoing else "switch on"
        if t.is_end:
            self.error("ActionAfterEnd", loc, f"ActionAfterEnd: cannot {verb} ${st.name}, its session has ended")
            return None
        if t.steps:
            self.error("WrongOrder", loc, f"WrongOrder: cannot {verb} ${st.name}, expected {_next_action(t)}")
            return None
        ref = t.tail
        if st.sends(ref.polarity) != outgoing:
            need = "send a label" if st.sends(ref.polarity) else "switch on"
            self.error("WrongOrder", loc, f"WrongOrder: ${st.name} must {need} next "
                                          f"({st.role.value} at {t})")
            return None
        return ref

    def stmt_SendLabel(self, s: ast.SendLabel, ctx):
        st = self.use(ctx, s.chan, s.loc)
        if st is None:
            return ctx
        ref = self.expect_choice(st, True, s.loc)
        if ref is None:
            return ctx
        branches = self.env[ref.name].branches
        if s.label not in branches:
            self.error("UnknownLabel", s.loc, f"choice {ref.name} has no label {s.label}")
            return ctx
        self.pc.record(s.nid, ref.polarity, "label")
        ctx[s.chan] = ChannelState(st.name, branches[s.label], st.role)
        return ctx

    def stmt_SwitchChan(self, s: ast.SwitchChan, ctx):
        st = self.use(ctx, s.chan, s.loc)
        if st is None:
            return ctx
        ref = self.expect_choice(st, False, s.loc)
        if ref is None:
            return ctx
        branches = self.env[ref.name].branches
        seen = set()
        for c in s.cases:
            if c.label not in branches or c.label in seen:
                self.error("ExtraCase", c.loc, f"ExtraCase({c.label}): not a label of choice {ref.name}"
                           if c.label not in branches else f"ExtraCase({c.label}): duplicate case")
            seen.add(c.label)
        for label in branches:
            if label not in seen:
                self.error("MissingCase", s.loc, f"MissingCase({label}): switch on ${s.chan} does not "
                                                 f"handle {label}")
        self.pc.record(s.nid, ref.polarity, "label")
        result = None
        first = True
        for c in s.cases:
            if c.label not in branches:
                continue
            branch_ctx = dict(ctx)
            branch_ctx[s.chan] = ChannelState(st.name, branches[c.label], st.role)
            out = self.block(c.body, branch_ctx)
            result = out if first else self.join(result, out, c.loc, "switch cases")
            first = False
        return result

    def stmt_Close(self, s: ast.Close, ctx):
        st = self.use(ctx, s.chan, s.loc)
        if st is None:
            return None
        if st.role is not Role.PROVIDER:
            self.error("WrongOrder", s.loc, f"WrongOrder: only the provider may close ${s.chan}; clients wait")
        elif not st.remaining.is_end:
            self.error("WrongOrder", s.loc, f"WrongOrder: cannot close ${s.chan}, expected "
                                            f"{_next_action(st.remaining)}")
        self.leftover(ctx, (s.chan,), s.loc)
        self.pc.record(s.nid, TO_CLIENT, "done")
        self.consume(ctx, s.chan)
        return None

    def stmt_Wait(self, s: ast.Wait, ctx):
        st = self.use(ctx, s.chan, s.loc)
        if st is None:
            return ctx
        if st.role is not Role.CLIENT:
            self.error("WrongOrder", s.loc, f"WrongOrder: the provider of ${s.chan} must close it, not wait")
        elif not st.remaining.is_end:
            self.error("WrongOrder", s.loc, f"WrongOrder: cannot wait on ${s.chan}, expected "
                                            f"{_next_action(st.remaining)}")
        self.pc.record(s.nid, TO_CLIENT, "done")
        self.consume(ctx, s.chan)
        return ctx

    def stmt_Forward(self, s: ast.Forward, ctx):
        c = self.use(ctx, s.provided, s.loc)
        d = self.use(ctx, s.used, s.loc)
        if c is None or d is None:
            return None
        if s.provided == s.used:
            self.error("DuplicateUse", s.loc, f"DuplicateUse(${s.used}): channel forwarded to itself")
            return None
        if c.role is not Role.PROVIDER or d.role is not Role.CLIENT:
            self.error("ForwardRoleError", s.loc, f"forward ${s.provided} = ${s.used} needs the provided "
                                                  f"channel on the left and a used channel on the right")
        elif not types_equal(self.env, c.remaining, d.remaining):
            self.error("ForwardTypeMismatch", s.loc, f"cannot forward ${s.provided} at {c.remaining} to "
                                                     f"${s.used} at {d.remaining}")
        elif c.remaining.is_end:
            self.error("ForwardTypeMismatch", s.loc, "cannot forward a finished session; use close and wait")
        self.leftover(ctx, (s.provided, s.used), s.loc)
        self.pc.record(s.nid, next_direction(c.remaining), "fwd")
        self.consume(ctx, s.provided)
        self.consume(ctx, s.used)
        return None

    def stmt_TailCall(self, s: ast.TailCall, ctx):
        st = self.use(ctx, s.chan, s.loc)
        callee = self.pc.functions.get(s.fn)
        if callee is None:
            self.error("UnknownFunction", s.loc, f"unknown function '{s.fn}'")
            return None
        if not callee.is_spawning:
            self.error("TypeMismatch", s.loc, f"{s.fn} does not provide a channel")
            return None
        if st is None:
            return None
        if st.role is not Role.PROVIDER:
            self.error("TailPositionError", s.loc, f"${s.chan} is not the provided channel of {self.f.name}")
        elif not types_equal(self.env, st.remaining, callee.provided[0]):
            self.error("PayloadMismatch", s.loc, f"{s.fn} provides {callee.provided[0]} but ${s.chan} "
                                                 f"is at {st.remaining}")
        for a in s.args:
            if isinstance(a, ast.ChanVar) and a.name == s.chan:
                self.error("DuplicateUse", a.loc, f"DuplicateUse(${s.chan}): provided channel passed as argument")
        inner = dict(ctx)
        inner.pop(s.chan, None)
        self.args(callee, s.args, inner, s.loc)
        self.leftover(inner, (), s.loc)
        self.pc.tail_calls.add(s.nid)
        self.consume(ctx, s.chan)
        return None

    def stmt_If(self, s: ast.If, ctx):
        self.condition(s.cond, ctx)
        then = self.block(s.then, dict(ctx))
        other = self.block(s.else_, dict(ctx)) if s.else_ is not None else dict(ctx)
        return self.join(then, other, s.loc, "if branches")

    def stmt_While(self, s: ast.While, ctx):
        self.condition(s.cond, ctx)
        out = self.block(s.body, dict(ctx))
        if out is not None and out != ctx:
            self.join(ctx, out, s.loc, "loop entry and loop body exit")
        if isinstance(s.cond, ast.BoolLit) and s.cond.value:
            return None
        return ctx

    def condition(self, cond, ctx) -> None:
        before = dict(ctx)
        t = self.expr(cond, ctx)
        if t is not None and t != "bool":
            self.error("TypeMismatch", cond.loc, f"condition must be bool, found {t}")
        if ctx != before:
            self.error("TypeMismatch", cond.loc, "channels cannot be consumed inside a condition")
            ctx.clear()
            ctx.update(before)

    def stmt_Return(self, s: ast.Return, ctx):
        if self.f.is_spawning:
            self.error("TypeMismatch", s.loc, f"{self.f.name} provides a channel; end it with close, "
                                              f"a forward, or a tail call")
            return None
        t = self.expr(s.expr, ctx) if s.expr is not None else "void"
        if t is not None and t != self.f.ret:
            self.error("TypeMismatch", s.loc, f"{self.f.name} returns {self.f.ret}, found {t}")
        self.leftover(ctx, (), s.loc)
        return None

    # -- entry --------------------------------------------------------------

    def valid_type(self, t: SessionType, loc: Loc) -> bool:
        try:
            validate(self.env, t)
            return True
        except UnknownChoice as exc:
            self.error("UnknownChoice", loc, str(exc))
            return False

    def run(self) -> None:
        f = self.f
        ctx = {}
        if f.provided is not None:
            st, name = f.provided
            self.valid_type(st, f.loc)
            ctx[name] = ChannelState(name, st, Role.PROVIDER)
        for p in f.params:
            if p.is_chan:
                if not self.valid_type(p.type, p.loc):
                    continue
                self.bind(ctx, p.name, p.type, Role.CLIENT, p.loc)
            else:
                self.declare_var(p.name, p.type, p.loc)
        out = self.block(f.body, ctx)
        if out is not None:
            end = f.body.stmts[-1].loc if f.body.stmts else f.body.loc
            self.leftover(out, (), end)
            if not f.is_spawning and f.ret != "void":
                self.error("MissingReturn", end, f"{f.name} may finish without returning {f.ret}")


class _ProgramChecker:
    def __init__(self, program: ast.Program, env: dict):
        self.program = program
        self.env = env
        self.diags: list = []
        self.functions = {f.name: f for f in program.functions}
        self.result = AnnotatedProgram(program, env)
        self.tail_calls = self.result.tail_calls
        self._widths: dict = {}

    def record(self, nid: int, direction: Direction, kind: str) -> None:
        self.result.directions[nid] = direction
        if kind in ("int", "bool", "chan"):
            self.result.payload_kinds[nid] = kind

    def annotate_spawn(self, nid: int, session: SessionType) -> None:
        if session not in self._widths:
            self._widths[session] = width_of(self.env, session)
        self.result.spawns[nid] = SpawnInfo(session, self._widths[session], initial_direction(self.env, session))

    def run(self) -> AnnotatedProgram:
        for name in BUILTINS:
            if name in self.functions:
                f = self.functions[name]
                self.diags.append(Diagnostic("Redeclaration", f.loc, f"'{name}' is a builtin"))
        for c in self.program.choices:
            for st in c.branches.values():
                try:
                    validate(self.env, st)
                except UnknownChoice as exc:
                    self.diags.append(Diagnostic("UnknownChoice", c.loc, str(exc)))
        main = self.functions.get(self.program.entry)
        if main is None:
            self.diags.append(Diagnostic("MissingMain", Loc(1, 1), "program has no main function"))
        elif main.is_spawning or main.chan_params:
            self.diags.append(Diagnostic("MissingMain", main.loc, "main must not provide or take channels"))
        for f in self.program.functions:
            _FunctionChecker(self, f).run()
        if self.diags:
            raise CompileError(self.diags)
        return self.result


def check_program(program: ast.Program, env: Optional[dict] = None) -> AnnotatedProgram:
    """Annotate ``program`` or raise CompileError carrying every diagnostic."""
    if env is None:
        env = program.env()
    return _ProgramChecker(program, env).run()


def _single(program: ast.Program, f: ast.FunctionDecl) -> tuple:
    pc = _ProgramChecker(program, program.env())
    _FunctionChecker(pc, f).run()
    return pc, pc.diags


def _filtered(program, f, kinds):
    pc, diags = _single(program, f)
    bad = [d for d in diags if d.kind in kinds]
    if bad:
        raise CompileError(bad)
    return pc


def check_session_fidelity(program: ast.Program, f: ast.FunctionDecl) -> dict:
    """Per-op directions for ``f``; raises on fidelity violations only."""
    return _filtered(program, f, FIDELITY_KINDS).result.directions


def check_linearity(program: ast.Program, f: ast.FunctionDecl) -> None:
    _filtered(program, f, LINEARITY_KINDS)


def annotate_spawns_and_forwards(program: ast.Program, f: ast.FunctionDecl) -> tuple:
    """(spawn annotations, forward directions) for ``f``."""
    pc = _filtered(program, f, FORWARD_KINDS)
    forwards = {s.nid: pc.result.directions[s.nid]
                for s in ast.walk(f) if isinstance(s, ast.Forward) and s.nid in pc.result.directions}
    return pc.result.spawns, forwards


def check_tail_call(program: ast.Program, f: ast.FunctionDecl) -> set:
    return _filtered(program, f, TAIL_KINDS).tail_calls
