import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import max_occupancy
from sessc.parser import parse_type
from sessc.session_types import (
    BOOL, END, INT, TO_CLIENT, TO_PROVIDER, UNBOUNDED, Bounded, Chan, ChoiceDecl, ChoiceRef,
    SessionType, SessionTypeError, Transmit, UnknownChoice, UnknownLabel, build_type_graph, dual,
    initial_direction, next_direction, session, types_equal, unfold, validate, width_of,
)
from sessc.session_types import recv as r
from sessc.session_types import send as s

ATM = {
    "atm": ChoiceDecl("atm", {
        "Deposit": parse_type("<?int; !int; ?choice atm>"),
        "Withdraw": parse_type("<?int; !choice result>"),
        "Quit": parse_type("<>"),
    }),
    "result": ChoiceDecl("result", {
        "Success": parse_type("<!int; ?choice atm>"),
        "Overdraft": parse_type("<?choice atm>"),
    }),
}
QUEUE = {
    "queue": ChoiceDecl("queue", {
        "Enq": parse_type("<?int; ?choice queue>"),
        "Deq": parse_type("<!choice queue_elem>"),
    }),
    "queue_elem": ChoiceDecl("queue_elem", {
        "None": parse_type("<>"),
        "Some": parse_type("<!int; ?choice queue>"),
    }),
}


def test_printing_round_trips():
    for text in ["<>", "<!int;>", "<!bool; ?int;>", "<?int; ?choice queue>", "<!<!int;>;>",
                 "<?<?choice queue>; !choice queue_elem>"]:
        assert str(parse_type(text)) == text


def test_dual_flips_steps_and_choice():
    t = parse_type("<!int; ?bool; ?choice queue>")
    assert dual(t) == parse_type("<?int; !bool; !choice queue>")


def test_dual_keeps_carried_session():
    t = parse_type("<!<!int;>;>")
    assert dual(t).steps[0] == Transmit(TO_PROVIDER, Chan(parse_type("<!int;>")))


def test_unfold():
    assert unfold(QUEUE, "queue", "Enq") == parse_type("<?int; ?choice queue>")
    with pytest.raises(UnknownLabel):
        unfold(QUEUE, "queue", "Peek")
    with pytest.raises(UnknownChoice):
        unfold(QUEUE, "stack", "Push")


def test_validate_reaches_into_payloads():
    validate(QUEUE, parse_type("<!<?choice queue>;>"))
    with pytest.raises(UnknownChoice):
        validate(QUEUE, parse_type("<!<?choice stack>;>"))


def test_empty_choice_is_rejected():
    with pytest.raises(SessionTypeError):
        ChoiceDecl("nothing", {})


def test_directions():
    assert initial_direction(ATM, parse_type("<?choice atm>")) is TO_PROVIDER
    assert initial_direction(ATM, parse_type("<!int;>")) is TO_CLIENT
    assert initial_direction(ATM, parse_type("<>")) is TO_CLIENT
    assert next_direction(parse_type("<?int; !int;>")) is TO_PROVIDER


def test_types_equal_is_nominal_for_choices():
    assert types_equal(QUEUE, parse_type("<?choice queue>"), parse_type("<?choice queue>"))
    assert not types_equal(QUEUE, parse_type("<?choice queue>"), parse_type("<!choice queue>"))
    assert not types_equal(QUEUE, parse_type("<!int;>"), parse_type("<!int; !int;>"))
    assert not types_equal(QUEUE, parse_type("<!int;>"), parse_type("<!bool;>"))


@pytest.mark.parametrize("text, env, expected", [
    ("<?choice atm>", ATM, Bounded(2)),
    ("<!bool; ?int;>", {}, Bounded(1)),
    ("<!int;>", {}, Bounded(2)),
    ("<>", {}, Bounded(1)),
    ("<?choice queue>", QUEUE, UNBOUNDED),
    ("<!int; !int; !int;>", {}, Bounded(4)),
])
def test_width_examples(text, env, expected):
    assert width_of(env, parse_type(text)) == expected


def test_atm_graph_shape():
    g = build_type_graph(ATM, parse_type("<?choice atm>"))
    g.check_coloring()
    # one node per choice polarity, per transmit, and per End
    origins = sorted(n.origin for n in g.nodes)
    assert origins.count("?choice atm") == 1
    assert origins.count("DONE") == 1
    # ?choice atm, ?int !int, ?int, !choice result, !int, DONE
    assert len(g.nodes) == 7


def test_queue_has_monochrome_cycle():
    g = build_type_graph(QUEUE, parse_type("<?choice queue>"))
    assert any(g.nodes[a].origin == "?int" and g.nodes[b].origin == "?choice queue" for a, b in g.intra_edges)


# -- generators ---------------------------------------------------------------

directions = st.sampled_from([TO_CLIENT, TO_PROVIDER])
prims = st.sampled_from([INT, BOOL])


@st.composite
def straight(draw, max_steps=6):
    steps = draw(st.lists(st.builds(Transmit, directions, prims), max_size=max_steps))
    return SessionType(tuple(steps), END)


@st.composite
def choice_env(draw):
    names = [f"c{i}" for i in range(draw(st.integers(1, 3)))]
    env = {}
    for name in names:
        branches = {}
        for k in range(draw(st.integers(1, 3))):
            steps = draw(st.lists(st.builds(Transmit, directions, prims), max_size=3))
            tail = draw(st.one_of(st.just(END), st.builds(ChoiceRef, st.sampled_from(names), directions)))
            branches[f"L{k}"] = SessionType(tuple(steps), tail)
        env[name] = ChoiceDecl(name, branches)
    entry = SessionType((), ChoiceRef(names[0], draw(directions)))
    return env, entry


def runs_oracle(t: SessionType) -> int:
    """Longest run of equal directions in the flow, DONE included."""
    flow = [x.dir for x in t.steps] + [TO_CLIENT]
    best = run = 1
    for a, b in zip(flow, flow[1:]):
        run = run + 1 if a is b else 1
        best = max(best, run)
    return best


@given(straight())
def test_dual_is_an_involution(t):
    assert dual(dual(t)) == t


@given(choice_env())
def test_dual_involution_with_choices(env_t):
    _, t = env_t
    assert dual(dual(t)) == t


@given(choice_env())
def test_graph_is_properly_two_coloured(env_t):
    env, t = env_t
    g = build_type_graph(env, t)
    for a, b in g.intra_edges:
        assert g.nodes[a].color is g.nodes[b].color
    for a, b in g.sync_edges:
        assert g.nodes[a].color is not g.nodes[b].color


@given(straight())
def test_straight_line_width_is_longest_run(t):
    assert width_of({}, t) == Bounded(runs_oracle(t))


@given(straight(max_steps=5))
@settings(max_examples=60, deadline=None)
def test_straight_line_width_matches_occupancy(t):
    assert width_of({}, t) == Bounded(max_occupancy({}, t, max_steps=10))


@given(choice_env())
@settings(max_examples=60, deadline=None)
def test_bounded_width_is_never_exceeded(env_t):
    env, t = env_t
    w = width_of(env, t)
    if w != UNBOUNDED:
        assert max_occupancy(env, t, max_steps=7) <= w.n


@given(straight(max_steps=6), st.builds(Transmit, directions, prims))
def test_appending_a_step_moves_width_by_at_most_one(t, step):
    before = width_of({}, t).n
    after = width_of({}, SessionType(t.steps + (step,), END)).n
    assert after <= before + 1
    assert after >= before - 1
    if after < before:
        # only a provider-bound step can cut the final run that ends in DONE
        assert step.dir is TO_PROVIDER
        assert not t.steps or t.steps[-1].dir is TO_CLIENT


def test_appending_can_shrink_width():
    # the trailing DONE no longer extends the run of client-bound messages
    assert width_of({}, session(s(INT))) == Bounded(2)
    assert width_of({}, session(s(INT), r(INT))) == Bounded(1)


def test_appending_fresh_direction_grows_width():
    assert width_of({}, session(r(INT))) == Bounded(1)
    assert width_of({}, session(r(INT), s(INT))) == Bounded(2)
