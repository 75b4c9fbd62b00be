"""Execute annotated programs on top of the channel runtime.

Each function is compiled once into a flat list of operations.  An operation
is a closure ``op(proc, env) -> int`` returning the index of the next
operation, or one of the negative status codes below.  Keeping the program
counter explicit lets a process park in the middle of a function when a
receive finds nothing to read, and resume there when a sender wakes it,
without holding on to any host stack.

Calls inside expressions are hoisted into temporaries ahead of the
statement, so every call is a separate operation.  A sequential call pushes
a frame; a tail call replaces the current one, which keeps a loop of tail
calls at constant frame depth.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from operator import itemgetter
from typing import Optional

from . import syntax as ast
from .runtime.core import (
    CHAN, DONE, FWD, LABEL, DONE_MSG, FidelityViolation, Message, OwnershipViolation,
    RuntimePanic, fwd,
)
from .session_types import TO_CLIENT, Direction
from .typechecker import AnnotatedProgram

BLOCK = -1      # parked on a channel; resume at the same op when woken
FRAME = -2      # the frame stack changed; reload it
TERMINATE = -3  # the process is finished

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class ArithmeticPanic(RuntimePanic):
    invariant = "arithmetic"


def wrap(x: int) -> int:
    """Reduce ``x`` to a signed 64-bit value."""
    return ((x - INT_MIN) & 0xFFFFFFFFFFFFFFFF) + INT_MIN


def cdiv(a: int, b: int) -> int:
    if b == 0:
        raise ArithmeticPanic("division by zero")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return q if q <= INT_MAX else wrap(q)


def cmod(a: int, b: int) -> int:
    if b == 0:
        raise ArithmeticPanic("modulo by zero")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    return a - b * q


def show(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


# ---------------------------------------------------------------------------
# Runtime structures

class Frame:
    __slots__ = ("code", "ops", "env", "pc", "ret_var")

    def __init__(self, code: "Code", env: dict, ret_var: Optional[str] = None):
        self.code = code
        self.ops = code.ops
        self.env = env
        self.pc = 0
        self.ret_var = ret_var


@dataclass
class Code:
    name: str
    params: list  # env keys in parameter order; channels as '$name'
    provided: Optional[str]  # env key of the provided channel
    ops: list = field(default_factory=list)


class Process:
    """A lightweight process: a stack of frames driven by a scheduler."""

    __slots__ = ("pid", "frames", "frame", "sched", "state", "woken", "finished",
                 "result", "max_depth", "parent")

    def __init__(self, pid: int, frame: Frame, sched, parent=None):
        self.pid = pid
        self.frames = [frame]
        self.frame = frame
        self.sched = sched
        self.state = 0
        self.woken = False
        self.finished = False
        self.result = None
        self.max_depth = 1
        self.parent = parent

    def __repr__(self) -> str:
        return f"<proc {self.pid} {self.frame.code.name}>"

    def wake(self) -> None:
        self.sched.make_ready(self)

    def run(self, budget: int) -> int:
        """Execute at most ``budget`` operations; returns BLOCK, TERMINATE or 0 (preempted)."""
        frame = self.frame
        ops = frame.ops
        env = frame.env
        pc = frame.pc
        while budget:
            budget -= 1
            r = ops[pc](self, env)
            if r >= 0:
                pc = r
            elif r == FRAME:
                frame = self.frame
                ops = frame.ops
                env = frame.env
                pc = frame.pc
            elif r == BLOCK:
                frame.pc = pc
                return BLOCK
            else:
                self.finished = True
                return TERMINATE
        frame.pc = pc
        return 0


@dataclass
class Image:
    """A compiled program."""
    annotated: AnnotatedProgram
    codes: dict
    check: bool

    @property
    def main(self) -> Code:
        return self.codes[self.annotated.program.entry]


# ---------------------------------------------------------------------------
# Expressions

def _has_call(e) -> bool:
    if isinstance(e, ast.Call):
        return True
    if isinstance(e, ast.Unary):
        return _has_call(e.operand)
    if isinstance(e, ast.Binary):
        return _has_call(e.left) or _has_call(e.right)
    return False


def _const(v):
    return lambda env: v


def _arith(op: str, l, r):
    if op == "+":
        def ev(env):
            x = l(env) + r(env)
            return x if INT_MIN <= x <= INT_MAX else wrap(x)
    elif op == "-":
        def ev(env):
            x = l(env) - r(env)
            return x if INT_MIN <= x <= INT_MAX else wrap(x)
    elif op == "*":
        def ev(env):
            x = l(env) * r(env)
            return x if INT_MIN <= x <= INT_MAX else wrap(x)
    elif op == "/":
        def ev(env):
            return cdiv(l(env), r(env))
    elif op == "%":
        def ev(env):
            return cmod(l(env), r(env))
    elif op == "<":
        def ev(env):
            return l(env) < r(env)
    elif op == "<=":
        def ev(env):
            return l(env) <= r(env)
    elif op == "==":
        def ev(env):
            return l(env) == r(env)
    elif op == "!=":
        def ev(env):
            return l(env) != r(env)
    elif op == "&&":
        def ev(env):
            return l(env) and r(env)
    elif op == "||":
        def ev(env):
            return l(env) or r(env)
    else:
        raise ValueError(op)
    return ev


def pure(e):
    """Closure evaluating a call-free expression against an environment."""
    if isinstance(e, ast.IntLit):
        return _const(e.value)
    if isinstance(e, ast.BoolLit):
        return _const(e.value)
    if isinstance(e, ast.Var):
        return itemgetter(e.name)
    if isinstance(e, ast.Unary):
        inner = pure(e.operand)
        if e.op == "-":
            return lambda env: wrap(-inner(env))
        return lambda env: not inner(env)
    if isinstance(e, ast.Binary):
        return _arith(e.op, pure(e.left), pure(e.right))
    raise TypeError(f"not a pure expression: {e!r}")


# ---------------------------------------------------------------------------
# Compiler

class _FunctionCompiler:
    def __init__(self, image: "Compiler", f: ast.FunctionDecl):
        self.image = image
        self.ann = image.ann
        self.check = image.check
        self.f = f
        self.ops: list = []
        self.temps = 0

    # -- emission helpers ---------------------------------------------------

    @property
    def here(self) -> int:
        return len(self.ops)

    def emit(self, make) -> int:
        """Append an op built by ``make(next_pc)``."""
        at = self.here
        self.ops.append(None)
        self.ops[at] = make(at + 1)
        return at

    def placeholder(self) -> int:
        self.ops.append(None)
        return self.here - 1

    def temp(self) -> str:
        self.temps += 1
        return f"%t{self.temps}"

    # -- expressions with calls --------------------------------------------

    def value(self, e):
        """Emit ops for any calls in ``e``; return a pure closure for the rest."""
        if not _has_call(e):
            return pure(e)
        if isinstance(e, ast.Call):
            t = self.temp()
            self.call(e, t)
            return itemgetter(t)
        if isinstance(e, ast.Unary):
            inner = self.value(e.operand)
            if e.op == "-":
                return lambda env: wrap(-inner(env))
            return lambda env: not inner(env)
        if e.op in ("&&", "||") and _has_call(e.right):
            t = self.temp()
            left = self.value(e.left)
            self.emit(lambda nxt: _assign(t, left, nxt))
            jump = self.placeholder()
            right = self.value(e.right)
            self.emit(lambda nxt: _assign(t, right, nxt))
            end = self.here
            get = itemgetter(t)
            if e.op == "&&":
                self.ops[jump] = lambda proc, env: jump + 1 if get(env) else end
            else:
                self.ops[jump] = lambda proc, env: end if get(env) else jump + 1
            return get
        # calls cannot touch the caller's variables, so hoisting them in
        # left-to-right order leaves the pure parts unaffected
        left = self.value(e.left)
        right = self.value(e.right)
        return _arith(e.op, left, right)

    def call(self, e: ast.Call, ret_var: Optional[str]) -> None:
        if e.fn == "print":
            arg = self.value(e.args[0])

            def make(nxt):
                def op(proc, env):
                    proc.sched.output.append(show(arg(env)))
                    return nxt
                return op
            self.emit(make)
            return
        args = self.bind_args(e.fn, self.arguments(e.args))
        code = self.image.codes[e.fn]

        def make(nxt):
            def op(proc, env):
                new_env = {}
                for key, get in args:
                    new_env[key] = get(env)
                proc.frame.pc = nxt
                frame = Frame(code, new_env, ret_var)
                proc.frames.append(frame)
                proc.frame = frame
                if len(proc.frames) > proc.max_depth:
                    proc.max_depth = len(proc.frames)
                return FRAME
            return op
        self.emit(make)

    def arguments(self, args: list) -> list:
        """[(callee env key, getter)] with values hoisted and channels moved out."""
        out = []
        for a in args:
            if isinstance(a, ast.ChanVar):
                out.append(("$" + a.name, _take("$" + a.name)))
            else:
                out.append((None, self.value(a)))
        return out

    def bind_args(self, fn: str, args: list) -> list:
        code = self.image.codes[fn]
        return [(key, get) for key, (_, get) in zip(code.params, args)]

    # -- statements ---------------------------------------------------------

    def block(self, b: ast.Block) -> None:
        for s in b.stmts:
            getattr(self, "stmt_" + type(s).__name__)(s)

    def stmt_Block(self, s):
        self.block(s)

    def stmt_VarDecl(self, s: ast.VarDecl):
        if isinstance(s.init, ast.Call):
            self.call(s.init, s.name)
            return
        if s.init is None:
            v = _const(0 if s.type == "int" else False)
        else:
            v = self.value(s.init)
        self.emit(lambda nxt: _assign(s.name, v, nxt))

    def stmt_Assign(self, s: ast.Assign):
        if isinstance(s.expr, ast.Call):
            self.call(s.expr, s.name)
            return
        v = self.value(s.expr)
        self.emit(lambda nxt: _assign(s.name, v, nxt))

    def stmt_ExprStmt(self, s: ast.ExprStmt):
        self.call(s.expr, None)

    def stmt_ChanDecl(self, s: ast.ChanDecl):
        info = self.ann.spawns[s.nid]
        args = self.bind_args(s.init.fn, self.arguments(s.init.args))
        code = self.image.codes[s.init.fn]
        key = "$" + s.name
        width, init_dir = info.width, info.direction
        check = self.check

        def make(nxt):
            def op(proc, env):
                new_env = {}
                for k, get in args:
                    new_env[k] = get(env)
                sched = proc.sched
                client, provider = sched.backend.new_channel(width, init_dir)
                new_env[code.provided] = provider
                child = sched.spawn(code, new_env, proc)
                if check:
                    client.holder = proc
                    for k in new_env:
                        if k[0] == "$":
                            new_env[k].holder = child
                env[key] = client
                return nxt
            return op
        self.emit(make)

    def stmt_Send(self, s: ast.Send):
        key = "$" + s.chan
        d = self.ann.directions[s.nid]
        kind = self.ann.payload_kinds[s.nid]
        owned = self.owned(key)
        if kind == CHAN:
            payload_key = "$" + s.expr.name
            check = self.check

            def make(nxt):
                def op(proc, env):
                    ep = owned(proc, env)
                    carried = env.pop(payload_key)
                    if check:
                        _verify_holder(carried, proc)
                        carried.holder = ("flight", ep.channel, d)
                    ep.channel.send(Message(CHAN, carried), d)
                    return nxt
                return op
        else:
            v = self.value(s.expr)

            def make(nxt):
                def op(proc, env):
                    owned(proc, env).channel.send(Message(kind, v(env)), d)
                    return nxt
                return op
        self.emit(make)

    def stmt_SendLabel(self, s: ast.SendLabel):
        d = self.ann.directions[s.nid]
        msg = Message(LABEL, s.label)
        owned = self.owned("$" + s.chan)

        def make(nxt):
            def op(proc, env):
                owned(proc, env).channel.send(msg, d)
                return nxt
            return op
        self.emit(make)

    def receiver(self, key: str, d: Direction, expected: str, deliver):
        """Op receiving on ``env[key]``, following forwards, then ``deliver(proc, env, msg)`` -> pc."""
        check = self.check

        def op(proc, env):
            ep = env[key]
            if check:
                _verify_holder(ep, proc)
            while True:
                msg = ep.channel.try_recv(d, proc)
                if msg is None:
                    return BLOCK
                if msg.kind is FWD:
                    ep.channel.retire()
                    ep = msg.value
                    if check:
                        ep.holder = proc
                    env[key] = ep
                    continue
                if msg.kind != expected:
                    raise FidelityViolation(f"{ep!r}: expected {expected}, received {msg!r}")
                return deliver(proc, env, msg)
        return op

    def stmt_Recv(self, s: ast.Recv):
        key = "$" + s.chan
        d = self.ann.directions[s.nid]
        kind = self.ann.payload_kinds[s.nid]
        check = self.check
        if kind == CHAN:
            target = "$" + s.var

            def make(nxt):
                def deliver(proc, env, msg):
                    if check:
                        msg.value.holder = proc
                    env[target] = msg.value
                    return nxt
                return self.receiver(key, d, CHAN, deliver)
        else:
            target = s.var

            def make(nxt):
                def deliver(proc, env, msg):
                    env[target] = msg.value
                    return nxt
                return self.receiver(key, d, kind, deliver)
        self.emit(make)

    def stmt_SwitchChan(self, s: ast.SwitchChan):
        key = "$" + s.chan
        d = self.ann.directions[s.nid]
        table: dict = {}

        def deliver(proc, env, msg):
            return table[msg.value]
        self.emit(lambda nxt: self.receiver(key, d, LABEL, deliver))
        exits = []
        for c in s.cases:
            table[c.label] = self.here
            self.block(c.body)
            exits.append(self.placeholder())
        end = self.here
        for j in exits:
            self.ops[j] = _jump(end)

    def stmt_Close(self, s: ast.Close):
        key = "$" + s.chan
        owned = self.owned(key)

        def make(nxt):
            def op(proc, env):
                ep = owned(proc, env)
                del env[key]
                ep.channel.send(DONE_MSG, TO_CLIENT)
                return TERMINATE
            return op
        self.emit(make)

    def stmt_Wait(self, s: ast.Wait):
        key = "$" + s.chan

        def make(nxt):
            def deliver(proc, env, msg):
                env.pop(key).channel.retire()
                return nxt
            return self.receiver(key, TO_CLIENT, DONE, deliver)
        self.emit(make)

    def stmt_Forward(self, s: ast.Forward):
        pkey, ukey = "$" + s.provided, "$" + s.used
        d = self.ann.directions[s.nid]
        check = self.check
        own_p, own_u = self.owned(pkey), self.owned(ukey)

        def make(nxt):
            def op(proc, env):
                provided = own_p(proc, env)
                used = own_u(proc, env)
                del env[pkey], env[ukey]
                if d is TO_CLIENT:
                    if check:
                        used.holder = ("flight", provided.channel, d)
                    provided.channel.send(fwd(used), d)
                else:
                    if check:
                        provided.holder = ("flight", used.channel, d)
                    used.channel.send(fwd(provided), d)
                return TERMINATE
            return op
        self.emit(make)

    def stmt_TailCall(self, s: ast.TailCall):
        args = self.bind_args(s.fn, self.arguments(s.args))
        code = self.image.codes[s.fn]
        key = "$" + s.chan
        target = code.provided

        def make(nxt):
            def op(proc, env):
                new_env = {}
                for k, get in args:
                    new_env[k] = get(env)
                new_env[target] = env[key]
                frame = Frame(code, new_env)
                proc.frames[-1] = frame
                proc.frame = frame
                return FRAME
            return op
        self.emit(make)

    def stmt_If(self, s: ast.If):
        cond = self.value(s.cond)
        branch = self.placeholder()
        self.block(s.then)
        if s.else_ is None:
            end = self.here
            self.ops[branch] = _branch(cond, branch + 1, end)
            return
        skip = self.placeholder()
        other = self.here
        self.block(s.else_)
        end = self.here
        self.ops[branch] = _branch(cond, branch + 1, other)
        self.ops[skip] = _jump(end)

    def stmt_While(self, s: ast.While):
        top = self.here
        cond = self.value(s.cond)
        branch = self.placeholder()
        self.block(s.body)
        self.ops.append(_jump(top))
        self.ops[branch] = _branch(cond, branch + 1, self.here)

    def stmt_Return(self, s: ast.Return):
        v = self.value(s.expr) if s.expr is not None else _const(None)
        self.emit(lambda nxt: _return(v))

    # -- helpers ------------------------------------------------------------

    def owned(self, key: str):
        """Getter for an endpoint, verifying ownership when checking."""
        if not self.check:
            return lambda proc, env: env[key]

        def get(proc, env):
            ep = env[key]
            _verify_holder(ep, proc)
            return ep
        return get

    def compile(self, code: Code) -> None:
        self.ops = code.ops
        self.block(self.f.body)
        if not self.f.is_spawning:
            self.ops.append(_return(_const(None)))


def _assign(name: str, v, nxt: int):
    def op(proc, env):
        env[name] = v(env)
        return nxt
    return op


def _jump(target: int):
    return lambda proc, env: target


def _branch(cond, then: int, other: int):
    return lambda proc, env: then if cond(env) else other


def _take(key: str):
    return lambda env: env.pop(key)


def _return(v):
    def op(proc, env):
        value = v(env)
        frames = proc.frames
        done = frames.pop()
        if not frames:
            proc.result = value
            return TERMINATE
        caller = frames[-1]
        if done.ret_var is not None:
            caller.env[done.ret_var] = value
        proc.frame = caller
        return FRAME
    return op


def _verify_holder(ep, proc) -> None:
    stats = proc.sched.backend.stats
    with stats.lock:
        stats.count("endpoint-uniqueness")
    if ep.holder is not proc:
        raise OwnershipViolation(f"{proc!r} used {ep!r} held by {ep.holder!r}")


class Compiler:
    def __init__(self, ann: AnnotatedProgram, check: bool = False):
        self.ann = ann
        self.check = check
        self.codes: dict = {}

    def run(self) -> Image:
        for f in self.ann.program.functions:
            params = [("$" if p.is_chan else "") + p.name for p in f.params]
            provided = "$" + f.provided[1] if f.provided else None
            self.codes[f.name] = Code(f.name, params, provided)
        for f in self.ann.program.functions:
            _FunctionCompiler(self, f).compile(self.codes[f.name])
        return Image(self.ann, self.codes, self.check)


def compile_program(ann: AnnotatedProgram, check: bool = False) -> Image:
    return Compiler(ann, check).run()
