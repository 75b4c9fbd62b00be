"""MiniCC0: a session-typed language with a width-aware message-passing runtime."""
from .corpus import load
from .diagnostics import CompileError, Diagnostic, Loc
from .parser import parse
from .scheduler import RunResult, run_program
from .typechecker import AnnotatedProgram, check_program

__all__ = ["AnnotatedProgram", "CompileError", "Diagnostic", "Loc", "RunResult", "check_program",
           "load", "parse", "run_program"]
