"""Render an AST back to MiniCC0 source that reparses to an equal tree."""
from __future__ import annotations

from . import syntax as ast
from .session_types import SessionType


def _ty(t) -> str:
    return str(t) if isinstance(t, SessionType) else t


def expr(e) -> str:
    if isinstance(e, ast.IntLit):
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.Var):
        return e.name
    if isinstance(e, ast.ChanVar):
        return "$" + e.name
    if isinstance(e, ast.Unary):
        return f"{e.op}({expr(e.operand)})"
    if isinstance(e, ast.Binary):
        return f"({expr(e.left)} {e.op} {expr(e.right)})"
    if isinstance(e, (ast.Call, ast.Spawn)):
        return f"{e.fn}({', '.join(expr(a) for a in e.args)})"
    raise TypeError(e)


def _block(b: ast.Block, indent: int) -> list:
    pad = "    " * indent
    lines = ["{"]
    for s in b.stmts:
        lines.extend(stmt(s, indent + 1))
    lines.append(pad + "}")
    return lines


def stmt(s, indent: int = 0) -> list:
    pad = "    " * indent
    if isinstance(s, ast.Block):
        lines = _block(s, indent)
        lines[0] = pad + lines[0]
        return lines
    if isinstance(s, ast.VarDecl):
        if s.init is None:
            return [f"{pad}{s.type} {s.name};"]
        return [f"{pad}{s.type} {s.name} = {expr(s.init)};"]
    if isinstance(s, ast.ChanDecl):
        return [f"{pad}{s.session} ${s.name} = {expr(s.init)};"]
    if isinstance(s, ast.Assign):
        return [f"{pad}{s.name} = {expr(s.expr)};"]
    if isinstance(s, ast.Send):
        return [f"{pad}send(${s.chan}, {expr(s.expr)});"]
    if isinstance(s, ast.SendLabel):
        return [f"{pad}${s.chan}.{s.label};"]
    if isinstance(s, ast.Recv):
        sigil = "$" if isinstance(s.type, SessionType) else ""
        return [f"{pad}{_ty(s.type)} {sigil}{s.var} = recv(${s.chan});"]
    if isinstance(s, ast.SwitchChan):
        lines = [f"{pad}switch (${s.chan}) {{"]
        for c in s.cases:
            body = _block(c.body, indent + 1)
            lines.append(f"{pad}    case {c.label}: {body[0]}")
            lines.extend(body[1:])
        lines.append(pad + "}")
        return lines
    if isinstance(s, ast.Close):
        return [f"{pad}close(${s.chan});"]
    if isinstance(s, ast.Wait):
        return [f"{pad}wait(${s.chan});"]
    if isinstance(s, ast.Forward):
        return [f"{pad}${s.provided} = ${s.used};"]
    if isinstance(s, ast.TailCall):
        return [f"{pad}${s.chan} = {s.fn}({', '.join(expr(a) for a in s.args)});"]
    if isinstance(s, ast.If):
        then = _block(s.then, indent)
        lines = [f"{pad}if ({expr(s.cond)}) {then[0]}"] + then[1:]
        if s.else_ is not None:
            other = _block(s.else_, indent)
            lines[-1] += " else " + other[0]
            lines.extend(other[1:])
        return lines
    if isinstance(s, ast.While):
        body = _block(s.body, indent)
        return [f"{pad}while ({expr(s.cond)}) {body[0]}"] + body[1:]
    if isinstance(s, ast.Return):
        if s.expr is None:
            return [f"{pad}return;"]
        return [f"{pad}return {expr(s.expr)};"]
    if isinstance(s, ast.ExprStmt):
        return [f"{pad}{expr(s.expr)};"]
    raise TypeError(s)


def _param(p: ast.Param) -> str:
    if p.is_chan:
        return f"{p.type} ${p.name}"
    return f"{p.type} {p.name}"


def function(f: ast.FunctionDecl) -> str:
    if f.provided is not None:
        head = f"{f.provided[0]} ${f.provided[1]} {f.name}"
    else:
        head = f"{f.ret} {f.name}"
    body = _block(f.body, 0)
    lines = [f"{head}({', '.join(_param(p) for p in f.params)}) {body[0]}"] + body[1:]
    return "\n".join(lines)


def choice(c: ast.ChoiceDef) -> str:
    lines = [f"choice {c.name} {{"]
    for label, st in c.branches.items():
        lines.append(f"    {st} {label};")
    lines.append("};")
    return "\n".join(lines)


def program(p: ast.Program) -> str:
    parts = [choice(c) for c in p.choices] + [function(f) for f in p.functions]
    return "\n\n".join(parts) + "\n"
