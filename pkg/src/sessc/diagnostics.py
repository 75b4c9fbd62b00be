from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOWHERE = Loc(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # LexError, ParseError, WrongOrder, Unconsumed, ...
    loc: Loc
    message: str
    expected: frozenset = field(default=frozenset(), compare=False)

    def render(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.loc.line}:{self.loc.col}: error: {self.message}"


class CompileError(Exception):
    """Raised with every diagnostic collected by a compiler pass."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in self.diagnostics))

    def kinds(self) -> list:
        return [d.kind for d in self.diagnostics]


class LexError(CompileError):
    def __init__(self, loc: Loc, message: str):
        super().__init__([Diagnostic("LexError", loc, message)])
        self.loc = loc
