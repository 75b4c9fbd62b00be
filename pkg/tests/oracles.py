"""Independent reference models used to judge the implementation.

Nothing here reuses the width inference, the checker or the runtime: the
occupancy explorer walks session types directly, and the program oracles are
straight sequential Python.
"""
from __future__ import annotations

from collections import deque

from sessc.session_types import TO_CLIENT, TO_PROVIDER, ChoiceRef, SessionType

# ---------------------------------------------------------------------------
# Exhaustive buffer-occupancy explorer

FWD = ("fwd",)
DONE = ("done",)


def _next_dir(t: SessionType):
    if t.steps:
        return t.steps[0].dir
    if isinstance(t.tail, ChoiceRef):
        return t.tail.polarity
    return None


def _moves(env, rem: SessionType, outgoing_dir, inbox, forwards: bool):
    """Yield (message sent or None, consumed inbox head?, new remaining or None)."""
    if rem.steps:
        step = rem.steps[0]
        if step.dir is outgoing_dir:
            yield ("val", str(step.payload)), False, rem.advance()
        elif inbox:
            if inbox[0] == FWD:
                yield None, True, None  # adopt the carried channel; this one is finished
            else:
                yield None, True, rem.advance()
    elif isinstance(rem.tail, ChoiceRef):
        branches = env[rem.tail.name].branches
        if rem.tail.polarity is outgoing_dir:
            for label, body in branches.items():
                yield ("label", label), False, body
        elif inbox:
            head = inbox[0]
            if head == FWD:
                yield None, True, None
            else:
                yield None, True, branches[head[1]]
    if forwards and not rem.is_end and _next_dir(rem) is outgoing_dir:
        yield FWD, False, None


def max_occupancy(env, t: SessionType, max_steps: int = 10, forwards: bool = True) -> int:
    """Largest number of buffered messages over every interleaving of a provider
    and a client following ``t`` for at most ``max_steps`` actions each.

    Messages in both directions are counted together, DONE and FWD included.
    The provider may forward whenever its next message flows to the client,
    the client whenever its next message flows to the provider.
    """
    start = (t, t, (), (), 0, 0)
    seen = {start}
    stack = [start]
    best = 0
    while stack:
        prov, cli, to_c, to_p, ps, cs = stack.pop()
        best = max(best, len(to_c) + len(to_p))
        succ = []
        if prov is not None and ps < max_steps:
            if prov.is_end:
                succ.append((None, cli, to_c + (DONE,), to_p, ps + 1, cs))
            else:
                for msg, took, rest in _moves(env, prov, TO_CLIENT, to_p, forwards):
                    nc = to_c + (msg,) if msg is not None else to_c
                    np = to_p[1:] if took else to_p
                    succ.append((rest, cli, nc, np, ps + 1, cs))
        if cli is not None and cs < max_steps:
            if cli.is_end:
                if to_c and to_c[0] in (DONE, FWD):
                    succ.append((prov, None, to_c[1:], to_p, ps, cs + 1))
            else:
                for msg, took, rest in _moves(env, cli, TO_PROVIDER, to_c, forwards):
                    np = to_p + (msg,) if msg is not None else to_p
                    nc = to_c[1:] if took else to_c
                    succ.append((prov, rest, nc, np, ps, cs + 1))
        for s in succ:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return best


# ---------------------------------------------------------------------------
# Sequential program oracles (same parameters as the corpus mains)

MASK = (1 << 64) - 1


def i64(x: int) -> int:
    x &= MASK
    return x - (1 << 64) if x >> 63 else x


def lcg(state: int) -> int:
    return (state * 1103515245 + 12345) % 2147483648


def fib_oracle(n: int):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return [str(a)], a


def queue_oracle(n: int, seed: int, cap: int):
    """Replay the queue driver against a plain FIFO."""
    q = deque()
    out = []
    nxt = 1

    def enq():
        nonlocal nxt
        q.append(nxt)
        nxt += 1

    def deq():
        out.append(str(q.popleft()))

    enq()
    enq()
    deq()
    state = seed
    for _ in range(n):
        state = lcg(state)
        do_enq = (state // 65536) % 2 == 0
        if not q:
            do_enq = True
        if cap <= len(q):
            do_enq = False
        if do_enq:
            enq()
        else:
            deq()
    while q:
        deq()
    return out, nxt - 1


def primes_oracle(n: int):
    sieve = [True] * (max(n, 1) + 1)
    primes = []
    for i in range(2, n + 1):
        if sieve[i]:
            primes.append(i)
            for j in range(i * i, n + 1, i):
                sieve[j] = False
    return [str(p) for p in primes], len(primes)


def atm_oracle(n: int, seed: int):
    balance, paid, state = 100, 0, seed
    out = []
    for _ in range(n):
        state = lcg(state)
        amount = (state // 65536) % 200
        if (state // 8192) % 2 == 0:
            balance += amount
            out.append(str(balance))
        elif amount <= balance:
            balance -= amount
            paid += amount
            out.append(str(amount))
        else:
            out.append("-1")
    return out, paid


def pingpong_oracle(n: int):
    out = []
    evens = acc = 0
    for i in range(n):
        a, b, c = i, i + 1, i64(i * i)
        m = i64(i64(i64(a * 31 + b) * 31) + c)
        out.append(str(m))
        if m % 2 == 0:
            evens += 1
        acc = i64(acc + a + b + c)
    out.append(str(acc))
    return out, evens


ORACLES = {
    "fib": fib_oracle,
    "queue": queue_oracle,
    "queue-notail": queue_oracle,
    "primes": primes_oracle,
    "atm": atm_oracle,
    "pingpong": pingpong_oracle,
}


def expected(name: str, params: dict):
    return ORACLES[name](**params)
