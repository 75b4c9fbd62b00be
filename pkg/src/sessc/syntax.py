"""Abstract syntax of MiniCC0 programs.

Every node carries a source location and a per-parse unique ``nid`` used by
later passes to key annotations.  Neither takes part in equality, so two
parses of equivalent text compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import NOWHERE, Loc
from .session_types import ChoiceDecl, SessionType


def _meta():
    return field(default=NOWHERE, compare=False, repr=False)


def _nid():
    return field(default=-1, compare=False, repr=False)


# --- expressions -----------------------------------------------------------

@dataclass
class IntLit:
    value: int
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class BoolLit:
    value: bool
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Var:
    name: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class ChanVar:
    name: str  # without the leading '$'
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Unary:
    op: str  # '-' | '!'
    operand: "Expr"
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Call:
    fn: str
    args: list
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Spawn:
    fn: str
    args: list
    loc: Loc = _meta()
    nid: int = _nid()


Expr = Union[IntLit, BoolLit, Var, ChanVar, Unary, Binary, Call, Spawn]


# --- statements ------------------------------------------------------------

@dataclass
class Block:
    stmts: list
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class VarDecl:
    type: str  # 'int' | 'bool'
    name: str
    init: Optional[Expr]
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class ChanDecl:
    session: SessionType
    name: str
    init: Expr  # Spawn after resolution
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Assign:
    name: str
    expr: Expr
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Send:
    chan: str
    expr: Expr
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class SendLabel:
    chan: str
    label: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Recv:
    type: Union[str, SessionType]
    var: str
    chan: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Case:
    label: str
    body: Block
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class SwitchChan:
    chan: str
    cases: list
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Close:
    chan: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Wait:
    chan: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Forward:
    provided: str
    used: str
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class TailCall:
    chan: str
    fn: str
    args: list
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class If:
    cond: Expr
    then: Block
    else_: Optional[Block]
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class While:
    cond: Expr
    body: Block
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class Return:
    expr: Optional[Expr]
    loc: Loc = _meta()
    nid: int = _nid()


@dataclass
class ExprStmt:
    expr: Expr
    loc: Loc = _meta()
    nid: int = _nid()


Stmt = Union[VarDecl, ChanDecl, Assign, Send, SendLabel, Recv, SwitchChan, Close,
             Wait, Forward, TailCall, If, While, Return, ExprStmt, Block]

CHANNEL_OPS = (Send, SendLabel, Recv, SwitchChan, Close, Wait, Forward)


# --- declarations ----------------------------------------------------------

@dataclass
class Param:
    type: Union[str, SessionType]  # 'int' | 'bool' | session type of a channel
    name: str
    loc: Loc = _meta()

    @property
    def is_chan(self) -> bool:
        return isinstance(self.type, SessionType)


@dataclass
class FunctionDecl:
    name: str
    provided: Optional[tuple]  # (SessionType, chan name) for spawning functions
    ret: Optional[str]  # 'int' | 'bool' | 'void' for sequential functions
    params: list
    body: Block
    loc: Loc = _meta()
    nid: int = _nid()

    @property
    def is_spawning(self) -> bool:
        return self.provided is not None

    @property
    def value_params(self) -> list:
        return [p for p in self.params if not p.is_chan]

    @property
    def chan_params(self) -> list:
        return [p for p in self.params if p.is_chan]


@dataclass
class ChoiceDef:
    name: str
    branches: dict  # label -> SessionType, in declaration order
    loc: Loc = _meta()

    def decl(self) -> ChoiceDecl:
        return ChoiceDecl(self.name, dict(self.branches))


@dataclass
class Program:
    choices: list
    functions: list
    entry: str = "main"

    def env(self) -> dict:
        return {c.name: c.decl() for c in self.choices}

    def function(self, name: str) -> Optional[FunctionDecl]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


def walk(node):
    """Yield ``node`` and every syntax node beneath it, depth first."""
    yield node
    if isinstance(node, Program):
        for f in node.functions:
            yield from walk(f)
    elif isinstance(node, FunctionDecl):
        yield from walk(node.body)
    elif isinstance(node, Block):
        for s in node.stmts:
            yield from walk(s)
    elif isinstance(node, SwitchChan):
        for c in node.cases:
            yield c
            yield from walk(c.body)
    elif isinstance(node, If):
        yield from walk(node.cond)
        yield from walk(node.then)
        if node.else_ is not None:
            yield from walk(node.else_)
    elif isinstance(node, While):
        yield from walk(node.cond)
        yield from walk(node.body)
    elif isinstance(node, (VarDecl,)):
        if node.init is not None:
            yield from walk(node.init)
    elif isinstance(node, (ChanDecl,)):
        yield from walk(node.init)
    elif isinstance(node, (Assign, Send, ExprStmt)):
        yield from walk(node.expr)
    elif isinstance(node, Return):
        if node.expr is not None:
            yield from walk(node.expr)
    elif isinstance(node, (Call, Spawn, TailCall)):
        for a in node.args:
            yield from walk(a)
    elif isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)
