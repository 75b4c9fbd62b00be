from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import LexError, Loc

KEYWORDS = {
    "int": "KwInt",
    "bool": "KwBool",
    "void": "KwVoid",
    "choice": "KwChoice",
    "send": "KwSend",
    "recv": "KwRecv",
    "switch": "KwSwitch",
    "case": "KwCase",
    "close": "KwClose",
    "wait": "KwWait",
    "if": "KwIf",
    "else": "KwElse",
    "while": "KwWhile",
    "return": "KwReturn",
    "true": "KwTrue",
    "false": "KwFalse",
}

# longest match first
PUNCT = [
    ("<=", "Le"), ("==", "EqEq"), ("!=", "NotEq"), ("&&", "AndAnd"), ("||", "OrOr"),
    ("<", "Lt"), (">", "Gt"), ("=", "Assign"), ("!", "Bang"), ("?", "Question"),
    (";", "Semi"), (",", "Comma"), (".", "Dot"), (":", "Colon"),
    ("(", "LParen"), (")", "RParen"), ("{", "LBrace"), ("}", "RBrace"),
    ("+", "Plus"), ("-", "Minus"), ("*", "Star"), ("/", "Slash"), ("%", "Percent"),
]
PUNCT_TEXT = {kind: text for text, kind in PUNCT}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[0-9]+")

MAX_INT = 2**63 - 1


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    loc: Loc

    def __repr__(self) -> str:
        if self.value is None:
            return self.kind
        return f"{self.kind} {self.value}"


def describe(kind: str) -> str:
    if kind in PUNCT_TEXT:
        return f"'{PUNCT_TEXT[kind]}'"
    for word, k in KEYWORDS.items():
        if k == kind:
            return f"'{word}'"
    return {"Ident": "identifier", "ChanIdent": "channel", "IntLit": "integer",
            "EOF": "end of input"}.get(kind, kind)


def tokenize(source: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(source)

    def loc_at(p: int) -> Loc:
        return Loc(line, p - line_start + 1)

    while pos < n:
        c = source[pos]
        if c == "\n":
            pos += 1
            line += 1
            line_start = pos
            continue
        if c in " \t\r\f\v":
            pos += 1
            continue
        if source.startswith("//", pos):
            nl = source.find("\n", pos)
            pos = n if nl < 0 else nl
            continue
        if source.startswith("/*", pos):
            start = loc_at(pos)
            end = source.find("*/", pos + 2)
            if end < 0:
                raise LexError(start, "unterminated comment")
            for i in range(pos, end):
                if source[i] == "\n":
                    line += 1
                    line_start = i + 1
            pos = end + 2
            continue
        loc = loc_at(pos)
        if c == "$":
            m = _IDENT.match(source, pos + 1)
            if not m:
                raise LexError(loc, "expected a channel name after '$'")
            tokens.append(Token("ChanIdent", m.group(), loc))
            pos = m.end()
            continue
        m = _IDENT.match(source, pos)
        if m:
            word = m.group()
            if word in KEYWORDS:
                tokens.append(Token(KEYWORDS[word], None, loc))
            else:
                tokens.append(Token("Ident", word, loc))
            pos = m.end()
            continue
        m = _NUMBER.match(source, pos)
        if m:
            value = int(m.group())
            if value > MAX_INT:
                raise LexError(loc, f"integer literal {m.group()} out of range")
            tokens.append(Token("IntLit", value, loc))
            pos = m.end()
            continue
        for text, kind in PUNCT:
            if source.startswith(text, pos):
                tokens.append(Token(kind, None, loc))
                pos += len(text)
                break
        else:
            raise LexError(loc, f"illegal character {c!r}")
    tokens.append(Token("EOF", None, loc_at(pos)))
    return tokens
