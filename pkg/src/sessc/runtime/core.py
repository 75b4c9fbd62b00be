"""Channels, endpoints and the message-passing primitives.

Two backends share one interface:

``opt``
    One buffer per channel plus a direction flag.  Bounded session types get
    a fixed ring of exactly ``width`` slots; unbounded ones get a growable
    queue.  Buffered messages always travel in the flagged direction, and
    the flag only changes while the buffer is empty.

``naive``
    Two unbounded one-way queues per channel, each with its own lock and
    wait slot, as a plain two-channel encoding would do.

Receivers never spin.  ``try_recv`` either hands back a message or parks the
caller's waiter on the channel under the channel lock; the next sender in
that direction calls ``waiter.wake()``.  Tasks use this directly; threads go
through the blocking ``recv`` wrapper.
"""
from __future__ import annotations

import itertools
import threading
from collections import deque
from typing import NamedTuple, Optional

from ..session_types import TO_CLIENT, TO_PROVIDER, Bounded, Direction, Role, Width

# message kinds
INT = "int"
BOOL = "bool"
CHAN = "chan"
LABEL = "label"
DONE = "done"
FWD = "fwd"


class Message(NamedTuple):
    kind: str
    value: object = None

    def __repr__(self) -> str:
        if self.kind == DONE:
            return "DONE"
        if self.kind == FWD:
            return f"fwd:{self.value!r}"
        return repr(self.value)


DONE_MSG = Message(DONE)


def val(kind: str, bits) -> Message:
    return Message(kind, bits)


def label(name: str) -> Message:
    return Message(LABEL, name)


def fwd(endpoint: "Endpoint") -> Message:
    return Message(FWD, endpoint)


# ---------------------------------------------------------------------------
# Panics

class RuntimePanic(Exception):
    invariant = "runtime"

    def __str__(self) -> str:
        return f"panic [{self.invariant}]: {super().__str__()}"


class BufferOverflow(RuntimePanic):
    invariant = "bounded-occupancy"


class DirectionViolation(RuntimePanic):
    invariant = "sync-point-emptiness"


class FidelityViolation(RuntimePanic):
    invariant = "session-fidelity"


class ForwardLastViolation(RuntimePanic):
    invariant = "forward-last"


class OwnershipViolation(RuntimePanic):
    invariant = "endpoint-uniqueness"


class RetiredChannelUse(RuntimePanic):
    invariant = "channel-retired"


class TreeShapeViolation(RuntimePanic):
    invariant = "process-tree"


# ---------------------------------------------------------------------------
# Endpoints

class Endpoint:
    """One side of a channel.  ``holder`` names the process allowed to use it."""

    __slots__ = ("channel", "role", "holder")

    def __init__(self, channel, role: Role, holder=None):
        self.channel = channel
        self.role = role
        self.holder = holder

    def __repr__(self) -> str:
        return f"<{self.role.value} of ch{self.channel.cid}>"


class ThreadWaiter:
    """Parks an OS thread until a sender wakes it."""

    __slots__ = ("event",)

    def __init__(self):
        self.event = threading.Event()

    def wake(self) -> None:
        self.event.set()

    def wait(self) -> None:
        self.event.wait()
        self.event.clear()


_cids = itertools.count(1)


# ---------------------------------------------------------------------------
# Optimised backend

class OptChannel:
    """One buffer, one lock, one direction flag.

    A bounded channel's buffer is a ``deque`` with ``maxlen`` equal to the
    width, i.e. a fixed-capacity circular buffer; an unbounded one is a plain
    ``deque``.  Session fidelity means only one side can ever be waiting to
    receive, so a single wait slot suffices.
    """

    __slots__ = ("cid", "lock", "direction", "buffer", "capacity", "waiter", "retired",
                 "client", "provider")

    def __init__(self, capacity: Optional[int], init_dir: Direction):
        self.cid = next(_cids)
        self.lock = threading.Lock()
        self.direction = init_dir
        self.buffer = deque(maxlen=capacity)
        self.capacity = capacity
        self.waiter = None
        self.retired = False
        self.client = Endpoint(self, Role.CLIENT)
        self.provider = Endpoint(self, Role.PROVIDER)

    def send(self, msg: Message, d: Direction) -> None:
        with self.lock:
            buf = self.buffer
            if buf:
                if d is not self.direction:
                    raise DirectionViolation(f"ch{self.cid}: {d} send while {len(buf)} message(s) "
                                             f"flow {self.direction}")
                if len(buf) == self.capacity:
                    raise BufferOverflow(f"ch{self.cid}: width {len(buf)} exceeded")
            else:
                self.direction = d
            buf.append(msg)
            w = self.waiter
            if w is None:
                return
            self.waiter = None
        w.wake()

    def try_recv(self, d: Direction, waiter) -> Optional[Message]:
        with self.lock:
            buf = self.buffer
            if buf and self.direction is d:
                return buf.popleft()
            self.waiter = waiter
            return None

    @property
    def count(self) -> int:
        return len(self.buffer)

    def contents(self) -> list:
        return list(self.buffer)

    def retire(self) -> None:
        self.retired = True


# ---------------------------------------------------------------------------
# Naive backend

class _Pipe:
    __slots__ = ("lock", "items", "waiter")

    def __init__(self):
        self.lock = threading.Lock()
        self.items = deque()
        self.waiter = None


class NaiveChannel:
    __slots__ = ("cid", "to_client", "to_provider", "retired", "client", "provider", "capacity")

    def __init__(self, width: Width = None, init_dir: Direction = TO_CLIENT):
        self.cid = next(_cids)
        self.to_client = _Pipe()
        self.to_provider = _Pipe()
        self.retired = False
        self.capacity = None
        self.client = Endpoint(self, Role.CLIENT)
        self.provider = Endpoint(self, Role.PROVIDER)

    def send(self, msg: Message, d: Direction) -> None:
        pipe = self.to_client if d is TO_CLIENT else self.to_provider
        with pipe.lock:
            pipe.items.append(msg)
            w = pipe.waiter
            pipe.waiter = None
        if w is not None:
            w.wake()

    def try_recv(self, d: Direction, waiter) -> Optional[Message]:
        pipe = self.to_client if d is TO_CLIENT else self.to_provider
        with pipe.lock:
            if pipe.items:
                return pipe.items.popleft()
            pipe.waiter = waiter
            return None

    @property
    def count(self) -> int:
        return len(self.to_client.items) + len(self.to_provider.items)

    def contents(self) -> list:
        return list(self.to_client.items) + list(self.to_provider.items)

    def retire(self) -> None:
        self.retired = True


# ---------------------------------------------------------------------------
# Invariant-checking variants

class Stats:
    """Counters shared by every checked channel of one run."""

    def __init__(self):
        self.lock = threading.Lock()
        self.live: dict = {}  # cid -> channel
        self.created = 0
        self.channel_ops = 0
        self.flips = 0
        self.max_occupancy: dict = {}  # cid -> (max seen, capacity)
        self.checks = {"sync-point-emptiness": 0, "bounded-occupancy": 0, "forward-last": 0,
                       "endpoint-uniqueness": 0, "process-tree": 0}

    def count(self, name: str, n: int = 1) -> None:
        self.checks[name] += n


def _checked(base):
    class Checked(base):
        __slots__ = ("stats", "sealed", "peak", "width", "last_dir")

        def _setup(self, stats: Stats, width: Width) -> None:
            self.stats = stats
            self.sealed = False
            self.peak = 0
            self.last_dir = None
            self.width = width.n if isinstance(width, Bounded) else None
            with stats.lock:
                stats.created += 1
                stats.live[self.cid] = self

        def send(self, msg: Message, d: Direction) -> None:
            if self.retired:
                raise RetiredChannelUse(f"send on retired ch{self.cid}")
            if self.sealed:
                raise ForwardLastViolation(f"ch{self.cid}: {msg!r} enqueued after a forward")
            if msg.kind == FWD:
                self.sealed = True
            flip = self.last_dir is not None and self.last_dir is not d
            self.last_dir = d
            super().send(msg, d)
            occupied = self.count
            st = self.stats
            with st.lock:
                st.channel_ops += 1
                st.count("forward-last")
                if isinstance(self, OptChannel):
                    st.count("sync-point-emptiness")
                if flip:
                    st.flips += 1
                if occupied > self.peak:
                    self.peak = occupied
                    st.max_occupancy[self.cid] = (occupied, self.width)
                if self.width is not None:
                    st.count("bounded-occupancy")
            if self.width is not None and occupied > self.width:
                raise BufferOverflow(f"ch{self.cid}: occupancy {occupied} > width {self.width}")

        def try_recv(self, d: Direction, waiter) -> Optional[Message]:
            if self.retired:
                raise RetiredChannelUse(f"receive on retired ch{self.cid}")
            msg = super().try_recv(d, waiter)
            if msg is not None:
                with self.stats.lock:
                    self.stats.channel_ops += 1
                if msg.kind == FWD and self.count:
                    raise ForwardLastViolation(f"ch{self.cid}: forward received with "
                                               f"{self.count} message(s) behind it")
            return msg

        def retire(self) -> None:
            if self.retired:
                raise RetiredChannelUse(f"ch{self.cid} retired twice")
            if self.count:
                raise RetiredChannelUse(f"ch{self.cid} retired with {self.count} message(s) buffered")
            super().retire()
            with self.stats.lock:
                self.stats.live.pop(self.cid, None)

    Checked.__name__ = "Checked" + base.__name__
    return Checked


CheckedOptChannel = _checked(OptChannel)
CheckedNaiveChannel = _checked(NaiveChannel)


# ---------------------------------------------------------------------------
# Backends

class Backend:
    """Factory and primitive operations for one runtime flavour."""

    name = "?"

    def __init__(self, check: bool = False):
        self.check = check
        self.stats = Stats() if check else None

    def make_channel(self, width: Width, init_dir: Direction):
        raise NotImplementedError

    def new_channel(self, width: Width, init_dir: Direction) -> tuple:
        """Allocate an empty channel; returns (client endpoint, provider endpoint)."""
        ch = self.make_channel(width, init_dir)
        return ch.client, ch.provider

    # -- operations on endpoints (blocking flavour, usable from threads) ----

    def send(self, ep: Endpoint, msg: Message, d: Direction) -> None:
        ep.channel.send(msg, d)

    def recv(self, ep: Endpoint, expected: str, d: Direction) -> tuple:
        """Block for the next message flowing ``d``; follow forwards.  Returns (message, endpoint)."""
        waiter = None
        while True:
            msg = ep.channel.try_recv(d, waiter)
            if msg is None:
                if waiter is None:
                    waiter = ThreadWaiter()
                    continue  # re-check with the waiter registered
                waiter.wait()
                continue
            if msg.kind == FWD:
                ep.channel.retire()
                ep = msg.value
                continue
            if msg.kind != expected:
                raise FidelityViolation(f"expected {expected}, received {msg!r}")
            return msg, ep

    def forward(self, provided: Endpoint, used: Endpoint, d: Direction) -> None:
        if d is TO_CLIENT:
            provided.channel.send(fwd(used), TO_CLIENT)
        else:
            used.channel.send(fwd(provided), TO_PROVIDER)

    def close_end(self, ep: Endpoint) -> None:
        ep.channel.send(DONE_MSG, TO_CLIENT)

    def wait_end(self, ep: Endpoint) -> Endpoint:
        msg, ep = self.recv(ep, DONE, TO_CLIENT)
        ep.channel.retire()
        return ep


class OptBackend(Backend):
    name = "opt"

    def make_channel(self, width: Width, init_dir: Direction):
        capacity = width.n if isinstance(width, Bounded) else None
        if self.check:
            ch = CheckedOptChannel(capacity, init_dir)
            ch._setup(self.stats, width)
            return ch
        return OptChannel(capacity, init_dir)


class NaiveBackend(Backend):
    name = "naive"

    def make_channel(self, width: Width, init_dir: Direction):
        if self.check:
            ch = CheckedNaiveChannel(width, init_dir)
            ch._setup(self.stats, width)
            return ch
        return NaiveChannel(width, init_dir)


BACKENDS = {"opt": OptBackend, "naive": NaiveBackend}


def make_backend(name: str, check: bool = False) -> Backend:
    try:
        return BACKENDS[name](check)
    except KeyError:
        raise ValueError(f"unknown backend {name!r} (choose opt or naive)") from None
