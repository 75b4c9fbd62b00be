"""Recursive-descent parser for MiniCC0.

Errors do not stop the parse: a failed statement is skipped up to the next
``;`` or closing brace and parsing resumes, so one run reports every
syntax error it can find.
"""
from __future__ import annotations

from . import syntax as ast
from .diagnostics import CompileError, Diagnostic
from .lexer import describe, tokenize
from .session_types import BOOL, END, INT, Chan, ChoiceRef, SessionType, TO_CLIENT, TO_PROVIDER, Transmit


class _Abort(Exception):
    """Unwinds to the nearest recovery point; the diagnostic is already recorded."""


EXPR_START = {"IntLit", "Ident", "ChanIdent", "KwTrue", "KwFalse", "LParen", "Minus", "Bang"}
STMT_START = {"KwInt", "KwBool", "Lt", "ChanIdent", "KwSend", "KwSwitch", "KwClose", "KwWait",
              "KwIf", "KwWhile", "KwReturn", "Ident", "LBrace"}
DECL_START = {"KwChoice", "Lt", "KwInt", "KwBool", "KwVoid"}

BINARY_LEVELS = [
    {"OrOr": "||"},
    {"AndAnd": "&&"},
    {"EqEq": "==", "NotEq": "!="},
    {"Lt": "<", "Le": "<="},
    {"Plus": "+", "Minus": "-"},
    {"Star": "*", "Slash": "/", "Percent": "%"},
]


class Parser:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.i = 0
        self.diags: list = []

    # -- token helpers ------------------------------------------------------

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *kinds) -> bool:
        return self.peek().kind in kinds

    def advance(self):
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def accept(self, kind):
        if self.at(kind):
            return self.advance()
        return None

    def expect(self, kind):
        if self.at(kind):
            return self.advance()
        self.fail({kind})

    def fail(self, expected, message=None):
        tok = self.peek()
        if message is None:
            names = ", ".join(sorted(describe(k) for k in expected))
            message = f"expected {names} but found {describe(tok.kind)}"
        self.diags.append(Diagnostic("ParseError", tok.loc, message, frozenset(expected)))
        raise _Abort()

    # -- recovery -----------------------------------------------------------

    def sync_statement(self) -> None:
        depth = 0
        while not self.at("EOF"):
            kind = self.peek().kind
            if kind == "LBrace":
                depth += 1
            elif kind == "RBrace":
                if depth == 0:
                    return
                depth -= 1
                if depth == 0:
                    self.advance()
                    return
            elif kind == "Semi" and depth == 0:
                self.advance()
                return
            self.advance()

    def sync_declaration(self) -> None:
        depth = 0
        while not self.at("EOF"):
            kind = self.advance().kind
            if kind == "LBrace":
                depth += 1
            elif kind == "RBrace":
                depth -= 1
                if depth <= 0:
                    self.accept("Semi")
                    return

    # -- declarations -------------------------------------------------------

    def program(self) -> ast.Program:
        choices, functions = [], []
        while not self.at("EOF"):
            try:
                if self.at("KwChoice"):
                    choices.append(self.choice_decl())
                elif self.at("Lt", "KwInt", "KwBool", "KwVoid"):
                    functions.append(self.function_decl())
                else:
                    self.fail(DECL_START, f"expected a choice or function declaration but found "
                                          f"{describe(self.peek().kind)}")
            except _Abort:
                self.sync_declaration()
        return ast.Program(choices, functions)

    def choice_decl(self) -> ast.ChoiceDef:
        loc = self.expect("KwChoice").loc
        name = self.expect("Ident").value
        self.expect("LBrace")
        branches = {}
        while True:
            st = self.session_type()
            label_tok = self.expect("Ident")
            self.expect("Semi")
            if label_tok.value in branches:
                self.diags.append(Diagnostic("DuplicateLabel", label_tok.loc,
                                             f"duplicate label '{label_tok.value}' in choice '{name}'"))
            branches[label_tok.value] = st
            if self.accept("RBrace"):
                break
            if not self.at("Lt"):
                self.fail({"Lt", "RBrace"})
        self.accept("Semi")
        return ast.ChoiceDef(name, branches, loc)

    def function_decl(self) -> ast.FunctionDecl:
        loc = self.peek().loc
        provided, ret = None, None
        if self.at("Lt"):
            st = self.session_type()
            chan = self.expect("ChanIdent").value
            provided = (st, chan)
        else:
            ret = {"KwInt": "int", "KwBool": "bool", "KwVoid": "void"}[self.advance().kind]
        name = self.expect("Ident").value
        self.expect("LParen")
        params = []
        if not self.at("RParen"):
            params.append(self.param())
            while self.accept("Comma"):
                params.append(self.param())
        self.expect("RParen")
        body = self.block()
        return ast.FunctionDecl(name, provided, ret, params, body, loc)

    def param(self) -> ast.Param:
        tok = self.peek()
        if self.accept("KwInt"):
            return ast.Param("int", self.expect("Ident").value, tok.loc)
        if self.accept("KwBool"):
            return ast.Param("bool", self.expect("Ident").value, tok.loc)
        if self.at("Lt"):
            st = self.session_type()
            return ast.Param(st, self.expect("ChanIdent").value, tok.loc)
        self.fail({"KwInt", "KwBool", "Lt"})

    def session_type(self) -> SessionType:
        self.expect("Lt")
        steps = []
        tail = END
        while True:
            if self.at("Bang", "Question"):
                d = TO_CLIENT if self.advance().kind == "Bang" else TO_PROVIDER
                if self.accept("KwChoice"):
                    tail = ChoiceRef(self.expect("Ident").value, d)
                    self.expect("Gt")
                    break
                if self.accept("KwInt"):
                    payload = INT
                elif self.accept("KwBool"):
                    payload = BOOL
                elif self.at("Lt"):
                    payload = Chan(self.session_type())
                else:
                    self.fail({"KwInt", "KwBool", "KwChoice", "Lt"})
                self.expect("Semi")
                steps.append(Transmit(d, payload))
            elif self.accept("Gt"):
                break
            else:
                self.fail({"Bang", "Question", "Gt"})
        return SessionType(tuple(steps), tail)

    # -- statements ---------------------------------------------------------

    def block(self) -> ast.Block:
        loc = self.expect("LBrace").loc
        stmts = self.statements_until("RBrace")
        self.expect("RBrace")
        return ast.Block(stmts, loc)

    def statements_until(self, *stops) -> list:
        stmts = []
        while not self.at("EOF", *stops):
            try:
                stmts.append(self.statement())
            except _Abort:
                self.sync_statement()
        return stmts

    def body(self) -> ast.Block:
        """A braced block, or a single statement wrapped as one."""
        if self.at("LBrace"):
            return self.block()
        loc = self.peek().loc
        return ast.Block([self.statement()], loc)

    def statement(self):
        tok = self.peek()
        kind = tok.kind
        loc = tok.loc
        if kind in ("KwInt", "KwBool"):
            ty = "int" if self.advance().kind == "KwInt" else "bool"
            name = self.expect("Ident").value
            if self.accept("Semi"):
                return ast.VarDecl(ty, name, None, loc)
            self.expect("Assign")
            if self.at("KwRecv"):
                chan = self.recv_call()
                self.expect("Semi")
                return ast.Recv(ty, name, chan, loc)
            e = self.expr()
            self.expect("Semi")
            return ast.VarDecl(ty, name, e, loc)
        if kind == "Lt":
            st = self.session_type()
            if not self.at("ChanIdent", "Ident"):
                self.fail({"ChanIdent"})
            name = self.advance().value
            self.expect("Assign")
            if self.at("KwRecv"):
                chan = self.recv_call()
                self.expect("Semi")
                return ast.Recv(st, name, chan, loc)
            call = self.call()
            self.expect("Semi")
            return ast.ChanDecl(st, name, call, loc)
        if kind == "ChanIdent":
            name = self.advance().value
            if self.accept("Dot"):
                label = self.expect("Ident").value
                self.expect("Semi")
                return ast.SendLabel(name, label, loc)
            if self.accept("Assign"):
                if self.at("ChanIdent"):
                    used = self.advance().value
                    self.expect("Semi")
                    return ast.Forward(name, used, loc)
                if self.at("Ident") and self.peek(1).kind == "LParen":
                    call = self.call()
                    self.expect("Semi")
                    return ast.TailCall(name, call.fn, call.args, loc)
                self.fail({"ChanIdent", "Ident"})
            self.fail({"Dot", "Assign"})
        if kind == "KwSend":
            self.advance()
            self.expect("LParen")
            chan = self.expect("ChanIdent").value
            self.expect("Comma")
            e = self.expr()
            self.expect("RParen")
            self.expect("Semi")
            return ast.Send(chan, e, loc)
        if kind == "KwSwitch":
            return self.switch()
        if kind in ("KwClose", "KwWait"):
            self.advance()
            self.expect("LParen")
            chan = self.expect("ChanIdent").value
            self.expect("RParen")
            self.expect("Semi")
            return ast.Close(chan, loc) if kind == "KwClose" else ast.Wait(chan, loc)
        if kind == "KwIf":
            self.advance()
            self.expect("LParen")
            cond = self.expr()
            self.expect("RParen")
            then = self.body()
            else_ = None
            if self.accept("KwElse"):
                else_ = self.body()
            return ast.If(cond, then, else_, loc)
        if kind == "KwWhile":
            self.advance()
            self.expect("LParen")
            cond = self.expr()
            self.expect("RParen")
            return ast.While(cond, self.body(), loc)
        if kind == "KwReturn":
            self.advance()
            e = None if self.at("Semi") else self.expr()
            self.expect("Semi")
            return ast.Return(e, loc)
        if kind == "Ident":
            if self.peek(1).kind == "Assign":
                name = self.advance().value
                self.advance()
                e = self.expr()
                self.expect("Semi")
                return ast.Assign(name, e, loc)
            e = self.expr()
            self.expect("Semi")
            return ast.ExprStmt(e, loc)
        if kind == "LBrace":
            return self.block()
        self.fail(STMT_START, f"expected a statement but found {describe(kind)}")

    def recv_call(self) -> str:
        self.expect("KwRecv")
        self.expect("LParen")
        chan = self.expect("ChanIdent").value
        self.expect("RParen")
        return chan

    def switch(self) -> ast.SwitchChan:
        loc = self.expect("KwSwitch").loc
        self.expect("LParen")
        chan = self.expect("ChanIdent").value
        self.expect("RParen")
        self.expect("LBrace")
        cases = []
        while not self.at("RBrace", "EOF"):
            try:
                case_loc = self.expect("KwCase").loc
                label = self.expect("Ident").value
                self.expect("Colon")
            except _Abort:
                self.sync_statement()
                continue
            if self.at("LBrace"):
                body = self.block()
            else:
                body_loc = self.peek().loc
                body = ast.Block(self.statements_until("KwCase", "RBrace"), body_loc)
            cases.append(ast.Case(label, body, case_loc))
        self.expect("RBrace")
        if not cases:
            self.diags.append(Diagnostic("ParseError", loc, "switch without cases", frozenset({"KwCase"})))
        return ast.SwitchChan(chan, cases, loc)

    # -- expressions --------------------------------------------------------

    def call(self) -> ast.Call:
        tok = self.expect("Ident")
        self.expect("LParen")
        args = []
        if not self.at("RParen"):
            args.append(self.expr())
            while self.accept("Comma"):
                args.append(self.expr())
        self.expect("RParen")
        return ast.Call(tok.value, args, tok.loc)

    def expr(self, level: int = 0):
        if level == len(BINARY_LEVELS):
            return self.unary()
        ops = BINARY_LEVELS[level]
        left = self.expr(level + 1)
        while self.peek().kind in ops:
            tok = self.advance()
            right = self.expr(level + 1)
            left = ast.Binary(ops[tok.kind], left, right, tok.loc)
        return left

    def unary(self):
        tok = self.peek()
        if self.accept("Minus"):
            return ast.Unary("-", self.unary(), tok.loc)
        if self.accept("Bang"):
            return ast.Unary("!", self.unary(), tok.loc)
        return self.primary()

    def primary(self):
        tok = self.peek()
        if self.accept("IntLit"):
            return ast.IntLit(tok.value, tok.loc)
        if self.accept("KwTrue"):
            return ast.BoolLit(True, tok.loc)
        if self.accept("KwFalse"):
            return ast.BoolLit(False, tok.loc)
        if self.accept("ChanIdent"):
            return ast.ChanVar(tok.value, tok.loc)
        if self.at("Ident"):
            if self.peek(1).kind == "LParen":
                return self.call()
            self.advance()
            return ast.Var(tok.value, tok.loc)
        if self.accept("LParen"):
            e = self.expr()
            self.expect("RParen")
            return e
        self.fail(EXPR_START)


def _resolve(program: ast.Program, diags: list) -> None:
    """Turn calls of spawning functions into Spawn nodes and number every node."""
    spawning = {f.name for f in program.functions if f.is_spawning}
    seen = {}
    for f in program.functions:
        if f.name in seen:
            diags.append(Diagnostic("DuplicateFunction", f.loc, f"function '{f.name}' is already defined"))
        seen[f.name] = f
    seen_choices = set()
    for c in program.choices:
        if c.name in seen_choices:
            diags.append(Diagnostic("DuplicateChoice", c.loc, f"choice '{c.name}' is already defined"))
        seen_choices.add(c.name)

    def fix(e):
        if isinstance(e, ast.Call):
            args = [fix(a) for a in e.args]
            if e.fn in spawning:
                return ast.Spawn(e.fn, args, e.loc)
            e.args = args
            return e
        if isinstance(e, ast.Binary):
            e.left = fix(e.left)
            e.right = fix(e.right)
        elif isinstance(e, ast.Unary):
            e.operand = fix(e.operand)
        return e

    for node in list(ast.walk(program)):
        if isinstance(node, (ast.VarDecl,)) and node.init is not None:
            node.init = fix(node.init)
        elif isinstance(node, ast.ChanDecl):
            node.init = fix(node.init)
        elif isinstance(node, (ast.Assign, ast.Send, ast.ExprStmt)):
            node.expr = fix(node.expr)
        elif isinstance(node, ast.Return) and node.expr is not None:
            node.expr = fix(node.expr)
        elif isinstance(node, (ast.If, ast.While)):
            node.cond = fix(node.cond)
        elif isinstance(node, ast.TailCall):
            node.args = [fix(a) for a in node.args]
    for nid, node in enumerate(ast.walk(program)):
        node.nid = nid


def parse_program(tokens: list) -> ast.Program:
    p = Parser(tokens)
    program = p.program()
    _resolve(program, p.diags)
    if p.diags:
        raise CompileError(p.diags)
    return program


def parse(source: str) -> ast.Program:
    return parse_program(tokenize(source))


def parse_type(source: str) -> SessionType:
    """Parse a lone session type such as ``<!int; ?choice queue>``."""
    p = Parser(tokenize(source))
    try:
        t = p.session_type()
        p.expect("EOF")
    except _Abort:
        raise CompileError(p.diags) from None
    return t
