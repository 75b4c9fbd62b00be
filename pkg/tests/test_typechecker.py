import pytest

from sessc import syntax as ast
from sessc.corpus import NAMES, source
from sessc.diagnostics import CompileError
from sessc.parser import parse
from sessc.session_types import TO_CLIENT, TO_PROVIDER, UNBOUNDED, Bounded
from sessc.typechecker import (
    annotate_spawns_and_forwards, check_linearity, check_program, check_session_fidelity,
    check_tail_call,
)

FIB = source("fib")
QUEUE = source("queue")


def diags(src):
    with pytest.raises(CompileError) as info:
        check_program(parse(src))
    return info.value.diagnostics


def kinds(src):
    return sorted({d.kind for d in diags(src)})


def ops(program, fn, kind):
    return [n for n in ast.walk(program.function(fn)) if isinstance(n, kind)]


@pytest.mark.parametrize("name", NAMES)
def test_corpus_is_accepted(name):
    check_program(parse(source(name)))


def test_fib_sends_flow_to_client():
    ann = check_program(parse(FIB))
    sends = ops(ann.program, "fib", ast.Send)
    assert [ann.directions[s.nid] for s in sends] == [TO_CLIENT, TO_CLIENT]
    assert all(ann.payload_kinds[s.nid] == "int" for s in sends)


def test_payload_mismatch():
    ds = diags(FIB.replace("send($c, n);", "send($c, true);"))
    assert [d.kind for d in ds] == ["PayloadMismatch"]
    assert "payload mismatch" in ds[0].message


def test_queue_tail_calls_are_marked():
    ann = check_program(parse(QUEUE))
    marked = {n.fn for n in ast.walk(ann.program) if isinstance(n, ast.TailCall) and n.nid in ann.tail_calls}
    assert marked == {"elem"}


PROVIDER = """
<?int; !bool;> $c f() {
    int x = recv($c);
    send($c, x == 0);
    close($c);
}
int main() {
    <?int; !bool;> $c = f();
    send($c, 1);
    bool b = recv($c);
    wait($c);
    return 0;
}
"""


def test_directions_follow_the_type():
    ann = check_program(parse(PROVIDER))
    f = ann.program.function("f")
    comm = [n for n in ast.walk(f) if isinstance(n, (ast.Send, ast.Recv))]
    assert [ann.directions[n.nid] for n in comm] == [TO_PROVIDER, TO_CLIENT]
    main = ann.program.function("main")
    comm = [n for n in ast.walk(main) if isinstance(n, (ast.Send, ast.Recv))]
    assert [ann.directions[n.nid] for n in comm] == [TO_PROVIDER, TO_CLIENT]


def test_client_cannot_send_on_a_producer():
    src = FIB.replace("int r = recv($c);", "send($c, 1); int r = 0;")
    assert "WrongOrder" in kinds(src)


def test_missing_case():
    src = QUEUE.replace("""        case Deq:
            $q.None;
            close($q);
""", "")
    ds = diags(src)
    assert [d.kind for d in ds] == ["MissingCase"]
    assert ds[0].message.startswith("MissingCase(Deq)")


def test_extra_case():
    src = QUEUE.replace("        case Deq:\n            $q.None;", "        case Peek:\n            close($q);\n        case Deq:\n            $q.None;", 1)
    assert "ExtraCase" in kinds(src)


def test_dropped_wait():
    ds = diags(FIB.replace("wait($c2);", ""))
    assert [d.kind for d in ds] == ["Unconsumed"]
    assert ds[0].message.startswith("Unconsumed($c2)")


def test_use_after_send():
    src = """
<!int;> $t total() { send($t, 1); close($t); }
<!<!int;>;> $c carrier(<!int;> $d) {
    send($c, $d);
    send($d, 1);
    close($c);
}
int main() {
    <!int;> $d = total();
    <!<!int;>;> $c = carrier($d);
    <!int;> $e = recv($c);
    wait($c);
    int v = recv($e);
    wait($e);
    return v;
}
"""
    ds = diags(src)
    assert ds[0].message.startswith("UseAfterConsume($d)")


def test_forward_type_mismatch():
    src = """
<!int;> $a one() { send($a, 1); close($a); }
<?int;> $b two() { int x = recv($b); close($b); }
<!int;> $c relay() {
    <?int;> $d = two();
    $c = $d;
}
int main() { <!int;> $c = relay(); int v = recv($c); wait($c); return v; }
"""
    assert kinds(src) == ["ForwardTypeMismatch"]


def test_forward_at_end_is_rejected():
    src = """
<> $a done() { close($a); }
<> $c relay() { <> $d = done(); $c = $d; }
int main() { <> $c = relay(); wait($c); return 0; }
"""
    assert kinds(src) == ["ForwardTypeMismatch"]


def test_forward_roles():
    src = QUEUE.replace("$q = $r;", "$r = $q;")
    assert "ForwardRoleError" in kinds(src)


def test_elem_forward_direction():
    ann = check_program(parse(QUEUE))
    fwd, = ops(ann.program, "elem", ast.Forward)
    assert ann.directions[fwd.nid] is TO_PROVIDER


def test_spawn_annotations():
    ann = check_program(parse(QUEUE))
    spawn = ops(ann.program, "empty", ast.ChanDecl)[0]
    info = ann.spawns[spawn.nid]
    assert (info.width, info.direction) == (UNBOUNDED, TO_PROVIDER)
    fib = check_program(parse(FIB))
    assert {(i.width, i.direction) for i in fib.spawns.values()} == {(Bounded(2), TO_CLIENT)}


def test_statement_after_tail_call():
    src = QUEUE.replace("$q = elem(x, $e);", "$q = elem(x, $e);\n            print(x);")
    ds = diags(src)
    assert [d.kind for d in ds] == ["TailPositionError"]


def test_primes_tail_calls_all_marked():
    ann = check_program(parse(source("primes")))
    calls = [n for n in ast.walk(ann.program) if isinstance(n, ast.TailCall)]
    assert len(calls) == 4 and all(c.nid in ann.tail_calls for c in calls)


def test_join_mismatch():
    src = FIB.replace("""        wait($c1);
        wait($c2);""", """        wait($c1);
        if (f1 < f2) { wait($c2); }""")
    assert "JoinMismatch" in kinds(src)


def test_loop_body_must_restore_context():
    src = """
<!int;> $c one() { send($c, 1); close($c); }
int main() {
    <!int;> $c = one();
    int i = 0;
    while (i < 1) {
        int v = recv($c);
        i = i + 1;
    }
    wait($c);
    return 0;
}
"""
    assert "JoinMismatch" in kinds(src)


def test_close_with_live_channels():
    src = """
<!int;> $a one() { send($a, 1); close($a); }
<> $c leaky() { <!int;> $d = one(); close($c); }
int main() { <> $c = leaky(); wait($c); return 0; }
"""
    assert kinds(src) == ["Unconsumed"]


def test_unreachable_after_close():
    src = FIB.replace("send($c, n);\n        close($c);", "send($c, n);\n        close($c);\n        n = 1;")
    assert kinds(src) == ["UnreachableCode"]


def test_no_channels_in_conditions():
    src = """
<!int;> $a one() { send($a, 1); close($a); }
bool take(<!int;> $d) { int v = recv($d); wait($d); return true; }
int main() {
    <!int;> $d = one();
    if (take($d)) { return 1; }
    return 0;
}
"""
    assert "TypeMismatch" in kinds(src)


def test_redeclaring_a_consumed_channel():
    src = """
<!int;> $a one() { send($a, 1); close($a); }
int main() {
    <!int;> $d = one();
    int x = recv($d);
    wait($d);
    <!int;> $d = one();
    int y = recv($d);
    wait($d);
    return x + y;
}
"""
    check_program(parse(src))


def test_value_scoping():
    assert kinds("int main() { if (true) { int x = 1; } return x; }") == ["UnknownVariable"]
    assert kinds("int main() { int x = 1; if (true) { int x = 2; } return x; }") == ["Redeclaration"]


def test_missing_main_and_return():
    assert kinds("int f() { return 0; }") == ["MissingMain"]
    assert kinds("int main() { int x = 0; }") == ["MissingReturn"]


def test_filtered_views():
    p = parse(FIB.replace("wait($c2);", ""))
    fib = p.function("fib")
    dirs = check_session_fidelity(p, fib)  # linearity problems are not its business
    assert set(dirs.values()) == {TO_CLIENT}
    with pytest.raises(CompileError):
        check_linearity(p, fib)
    spawns, forwards = annotate_spawns_and_forwards(parse(QUEUE), parse(QUEUE).function("elem"))
    assert not spawns and list(forwards.values()) == [TO_PROVIDER]
    q = parse(QUEUE)
    assert len(check_tail_call(q, q.function("elem"))) == 1


def test_directions_alternate_at_sync_points():
    # ponger receives three values, then sends two: a single flip per round
    ann = check_program(parse(source("pingpong")))
    ponger = ann.program.function("ponger")
    ping = ponger.body.stmts[0].cases[0]
    comm = [n for n in ast.walk(ping.body) if isinstance(n, (ast.Send, ast.Recv))]
    assert [ann.directions[n.nid] for n in comm] == [TO_PROVIDER] * 3 + [TO_CLIENT] * 2


# -- mutation catalog -----------------------------------------------------------

from mutations import CATEGORIES, mutants_of_source  # noqa: E402

CONSUMPTION = {"Unconsumed", "DuplicateUse", "JoinMismatch"}
EXPECTED_KINDS = {
    "swap send/recv": {"WrongOrder"},
    "change payload kind": {"PayloadMismatch"},
    "drop wait": CONSUMPTION,
    "drop close": CONSUMPTION,
    "duplicate channel use": {"WrongOrder", "ActionAfterEnd", "UnreachableCode", "UseAfterConsume",
                              "TailPositionError", "DuplicateUse"},
    "move tail call": {"TailPositionError"},
    "remove switch case": {"MissingCase"},
}


@pytest.mark.parametrize("name", NAMES)
def test_every_mutant_is_rejected_with_a_fitting_diagnostic(name):
    seen = set()
    for category, what, src in mutants_of_source(source(name)):
        seen.add(category)
        found = {d.kind for d in diags(src)}
        assert found & EXPECTED_KINDS[category], f"{what}: {sorted(found)}"
    assert seen <= set(CATEGORIES)
