"""Session types, duality, and buffer-width inference.

Types are written from the provider's point of view.  A ``Transmit`` with
direction ``TO_CLIENT`` is a provider send (``!``); ``TO_PROVIDER`` is a
provider receive (``?``).  Named choices are the only recursion mechanism.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Union


class Direction(enum.Enum):
    TO_CLIENT = "toClient"
    TO_PROVIDER = "toProvider"

    def flip(self) -> "Direction":
        return TO_PROVIDER if self is TO_CLIENT else TO_CLIENT

    @property
    def sigil(self) -> str:
        return "!" if self is TO_CLIENT else "?"

    def __str__(self) -> str:
        return self.value


TO_CLIENT = Direction.TO_CLIENT
TO_PROVIDER = Direction.TO_PROVIDER


class Role(enum.Enum):
    PROVIDER = "provider"
    CLIENT = "client"


class SessionTypeError(Exception):
    pass


class UnknownChoice(SessionTypeError):
    def __init__(self, name: str):
        super().__init__(f"unknown choice '{name}'")
        self.name = name


class UnknownLabel(SessionTypeError):
    def __init__(self, choice: str, label: str):
        super().__init__(f"choice '{choice}' has no label '{label}'")
        self.choice = choice
        self.label = label


# ---------------------------------------------------------------------------
# Type syntax

@dataclass(frozen=True)
class Prim:
    name: str  # "int" | "bool"

    def __str__(self) -> str:
        return self.name


INT = Prim("int")
BOOL = Prim("bool")


@dataclass(frozen=True)
class Chan:
    session: "SessionType"

    def __str__(self) -> str:
        return str(self.session)


Payload = Union[Prim, Chan]


@dataclass(frozen=True)
class Transmit:
    dir: Direction
    payload: Payload

    def __str__(self) -> str:
        return f"{self.dir.sigil}{self.payload};"


@dataclass(frozen=True)
class End:
    def __str__(self) -> str:
        return ""


END = End()


@dataclass(frozen=True)
class ChoiceRef:
    name: str
    polarity: Direction  # TO_CLIENT = "!choice" (internal), TO_PROVIDER = "?choice"

    def __str__(self) -> str:
        return f"{self.polarity.sigil}choice {self.name}"


Terminator = Union[End, ChoiceRef]


@dataclass(frozen=True)
class SessionType:
    steps: tuple = ()
    tail: Terminator = END

    def __str__(self) -> str:
        parts = [str(s) for s in self.steps]
        if isinstance(self.tail, ChoiceRef):
            parts.append(str(self.tail))
        return "<" + " ".join(parts) + ">"

    @property
    def is_end(self) -> bool:
        return not self.steps and self.tail is END

    def advance(self) -> "SessionType":
        """The type left after the first Transmit."""
        return SessionType(self.steps[1:], self.tail)


@dataclass(frozen=True)
class ChoiceDecl:
    name: str
    branches: Mapping[str, SessionType] = field(hash=False)

    def __post_init__(self):
        if not self.branches:
            raise SessionTypeError(f"choice '{self.name}' declares no branches")


ChoiceEnv = Mapping[str, ChoiceDecl]


def session(*steps: Transmit, tail: Terminator = END) -> SessionType:
    return SessionType(tuple(steps), tail)


def send(payload: Payload) -> Transmit:
    return Transmit(TO_CLIENT, payload)


def recv(payload: Payload) -> Transmit:
    return Transmit(TO_PROVIDER, payload)


# ---------------------------------------------------------------------------
# Operations

def _lookup(env: ChoiceEnv, name: str) -> ChoiceDecl:
    try:
        return env[name]
    except KeyError:
        raise UnknownChoice(name) from None


def validate(env: ChoiceEnv, t: SessionType) -> None:
    """Raise UnknownChoice if ``t`` (or a channel payload inside it) names an undeclared choice."""
    for step in t.steps:
        if isinstance(step.payload, Chan):
            validate(env, step.payload.session)
    if isinstance(t.tail, ChoiceRef):
        _lookup(env, t.tail.name)


def dual(t: SessionType) -> SessionType:
    # a carried channel keeps its own session; only the carrying action flips
    steps = tuple(Transmit(s.dir.flip(), s.payload) for s in t.steps)
    tail = t.tail
    if isinstance(tail, ChoiceRef):
        tail = ChoiceRef(tail.name, tail.polarity.flip())
    return SessionType(steps, tail)


def unfold(env: ChoiceEnv, name: str, label: str) -> SessionType:
    decl = _lookup(env, name)
    try:
        return decl.branches[label]
    except KeyError:
        raise UnknownLabel(name, label) from None


def initial_direction(env: ChoiceEnv, t: SessionType) -> Direction:
    if t.steps:
        return t.steps[0].dir
    if isinstance(t.tail, ChoiceRef):
        return t.tail.polarity
    return TO_CLIENT  # only DONE will flow


def next_direction(t: SessionType) -> Direction:
    """Flow direction of the next message on a channel at type ``t`` (DONE for End)."""
    if t.steps:
        return t.steps[0].dir
    if isinstance(t.tail, ChoiceRef):
        return t.tail.polarity
    return TO_CLIENT


def types_equal(env: ChoiceEnv, a: SessionType, b: SessionType) -> bool:
    if len(a.steps) != len(b.steps):
        return False
    for x, y in zip(a.steps, b.steps):
        if x.dir is not y.dir:
            return False
        if isinstance(x.payload, Chan) and isinstance(y.payload, Chan):
            if not types_equal(env, x.payload.session, y.payload.session):
                return False
        elif x.payload != y.payload:
            return False
    if isinstance(a.tail, ChoiceRef) and isinstance(b.tail, ChoiceRef):
        return a.tail.name == b.tail.name and a.tail.polarity is b.tail.polarity
    return a.tail == b.tail


# ---------------------------------------------------------------------------
# Type graph and width

@dataclass(frozen=True)
class Node:
    id: int
    color: Direction
    origin: str  # "!int", "?choice atm", "DONE", ...


@dataclass
class TypeGraph:
    nodes: list = field(default_factory=list)
    intra_edges: set = field(default_factory=set)
    sync_edges: set = field(default_factory=set)
    entry: int = -1

    def check_coloring(self) -> None:
        for a, b in self.intra_edges:
            assert self.nodes[a].color is self.nodes[b].color, (a, b)
        for a, b in self.sync_edges:
            assert self.nodes[a].color is not self.nodes[b].color, (a, b)


@dataclass(frozen=True)
class Bounded:
    n: int

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class _Unbounded:
    def __str__(self) -> str:
        return "unbounded"


UNBOUNDED = _Unbounded()
Width = Union[Bounded, _Unbounded]


class _GraphBuilder:
    def __init__(self, env: ChoiceEnv):
        self.env = env
        self.g = TypeGraph()
        self.choice_nodes: dict = {}

    def node(self, color: Direction, origin: str) -> int:
        nid = len(self.g.nodes)
        self.g.nodes.append(Node(nid, color, origin))
        return nid

    def edge(self, a: int, b: int) -> None:
        if self.g.nodes[a].color is self.g.nodes[b].color:
            self.g.intra_edges.add((a, b))
        else:
            self.g.sync_edges.add((a, b))

    def sequence(self, t: SessionType) -> int:
        ids = [self.node(s.dir, f"{s.dir.sigil}{s.payload}") for s in t.steps]
        if isinstance(t.tail, ChoiceRef):
            ids.append(self.choice(t.tail))
        else:
            ids.append(self.node(TO_CLIENT, "DONE"))
        for a, b in zip(ids, ids[1:]):
            self.edge(a, b)
        return ids[0]

    def choice(self, ref: ChoiceRef) -> int:
        key = (ref.name, ref.polarity)
        if key in self.choice_nodes:
            return self.choice_nodes[key]
        decl = _lookup(self.env, ref.name)
        nid = self.node(ref.polarity, str(ref))
        self.choice_nodes[key] = nid
        for body in decl.branches.values():
            self.edge(nid, self.sequence(body))
        return nid


def build_type_graph(env: ChoiceEnv, t: SessionType) -> TypeGraph:
    b = _GraphBuilder(env)
    b.g.entry = b.sequence(t)
    b.g.check_coloring()
    return b.g


def infer_width(g: TypeGraph) -> Width:
    """Longest monochromatic path, counted in nodes; unbounded on a monochromatic cycle."""
    n = len(g.nodes)
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for a, b in g.intra_edges:
        succ[a].append(b)
        indeg[b] += 1
    queue = deque(i for i in range(n) if indeg[i] == 0)
    longest = [1] * n
    seen = 0
    while queue:
        a = queue.popleft()
        seen += 1
        for b in succ[a]:
            longest[b] = max(longest[b], longest[a] + 1)
            indeg[b] -= 1
            if indeg[b] == 0:
                queue.append(b)
    if seen < n:
        return UNBOUNDED
    return Bounded(max(longest))


def width_of(env: ChoiceEnv, t: SessionType) -> Width:
    return infer_width(build_type_graph(env, t))
