"""The bundled example programs and their default parameters."""
from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Union

from .parser import parse
from .typechecker import AnnotatedProgram, check_program

NAMES = ("fib", "queue", "queue-notail", "primes", "atm", "pingpong")

# small enough for an interactive `sessc run`
RUN_DEFAULTS = {
    "fib": {"n": 10},
    "queue": {"n": 20, "seed": 1, "cap": 8},
    "queue-notail": {"n": 20, "seed": 1, "cap": 8},
    "primes": {"n": 50},
    "atm": {"n": 10, "seed": 1},
    "pingpong": {"n": 10},
}

# every program performs at least 10^4 channel operations at these settings
BENCH_DEFAULTS = {
    "fib": {"n": 23},
    "queue": {"n": 20000, "seed": 1, "cap": 8},
    "queue-notail": {"n": 20000, "seed": 1, "cap": 8},
    "primes": {"n": 10000},
    "atm": {"n": 3000, "seed": 1},
    "pingpong": {"n": 2000},
}


def path(name: str) -> Path:
    return Path(str(resources.files(__package__).joinpath("corpus", f"{name}.mc1")))


def source(name: str) -> str:
    return path(name).read_text()


def load(name_or_path: Union[str, Path]) -> AnnotatedProgram:
    """Parse and check a corpus program by name, or any file by path."""
    p = Path(name_or_path)
    text = source(str(name_or_path)) if str(name_or_path) in NAMES else p.read_text()
    return check_program(parse(text))


def stem(name_or_path: Union[str, Path]) -> str:
    return Path(name_or_path).stem if str(name_or_path) not in NAMES else str(name_or_path)
