from fractions import Fraction

import pytest

from dtnmc.model import parse_model
from dtnmc.oracle import (
    _Net,
    _gta_moves,
    _lbta_moves,
    concretize,
    eval_constraint_on_locs,
    explore_network,
    project_trace,
    simulate_trace,
    witness_region_path,
)
from dtnmc.regions import RegionState, initial_region

LOSSY = """lbta B
clocks c
broadcasts a
location p initial
location ps
location q
location qs
trans p -> ps label: snd sync: a!!
trans q -> qs label: rcv sync: a??
"""


def test_labels_grow_with_network_size(fig1):
    fired = {n: explore_network(fig1, n, slot_cap=2).labels for n in (1, 2, 3)}
    assert fired[1] == {"s0", "s1", "s2"}
    assert fired[2] == {"s0", "s1", "s2", "s4", "s5", "s6"}
    assert fired[3] == fired[2] | {"serr"}
    assert fired[1] < fired[2] < fired[3]


def test_witness_concretize_simulate(fig1):
    steps = witness_region_path(fig1, 3, "serr", slot_cap=2)
    assert steps is not None
    trace = concretize(fig1, 3, steps)
    assert [e["label"] for e in trace] == ["s0", "s1", "s4", "s5", "s4", "serr"]
    assert sum(e["delay"] for e in trace) == 2
    snaps = simulate_trace(fig1, 3, trace)
    assert snaps[0] == (0, ("init", "init", "init"))
    assert snaps[-1] == (2, ("post", "done", "error"))
    for t, _ in snaps:
        assert 0 <= t <= 2


def test_witness_absent(fig1):
    assert witness_region_path(fig1, 2, "serr", slot_cap=2) is None
    assert witness_region_path(fig1, 3, "serr", slot_cap=2, max_states=50) is None


def test_canon_collapses_process_symmetry(fig3):
    net = _Net(fig3, 2, 2)
    start = net.initial()
    moves = _gta_moves(net, start)
    # the same transition fired by either process reaches one canonical state
    by_desc = {desc[0][0]: nxt for desc, nxt in moves}
    assert set(by_desc) == {0, 1}
    assert net.canon(by_desc[0]).key() == net.canon(by_desc[1]).key()
    assert by_desc[0].key() != by_desc[1].key()


def test_supports_shape(fig3):
    res = explore_network(fig3, 2, slot_cap=1)
    for (kind, index), sups in res.supports.items():
        assert kind in ("point", "open") and 0 <= index <= 1
        for sup in sups:
            for loc, unbounded, _key in sup:
                assert loc in fig3.locations
                assert unbounded is False  # slot cap keeps t bounded


def test_exhaustion_flag(fig3):
    res = explore_network(fig3, 3, slot_cap=3, max_states=40)
    assert res.exhausted
    full = explore_network(fig3, 2, slot_cap=2)
    assert not full.exhausted and full.states_explored > 0


def test_eval_constraint_on_locs(fig3):
    res = explore_network(fig3, 2, slot_cap=2)
    assert eval_constraint_on_locs(fig3, "#q1>=1 && #init==0", res)
    assert not eval_constraint_on_locs(fig3, "#q1>=1 && #q1==0", res)
    with pytest.raises(ValueError, match="unknown location 'zz'"):
        eval_constraint_on_locs(fig3, "#zz>=1", res)


def test_lossy_receiver_subsets():
    b = parse_model(LOSSY)
    net = _Net(b, 3, 2)
    state = RegionState(("p", "q", "q"), initial_region(net.clocks, net.bounds), 0)
    moves = _lbta_moves(net, state)
    outcomes = {nxt.loc for _, nxt in moves}
    assert outcomes == {
        ("ps", "q", "q"), ("ps", "qs", "q"), ("ps", "q", "qs"), ("ps", "qs", "qs"),
    }
    descs = {desc for desc, _ in moves}
    assert all(d[0] == (0, b.transitions[0]) for d in descs)
    # lossiness: with nobody listening the send still fires, alone
    alone = _lbta_moves(net, net.initial())
    assert len(alone) == 3  # one bare send per process
    assert all(len(d) == 1 for d, _ in alone)


def test_project_trace_folds_delays():
    trace = [
        {"delay": 1, "process": 1, "label": "a"},
        {"delay": 0, "process": 2, "label": None},
        {"delay": 1, "process": 2, "label": "b"},
        {"delay": 0, "process": 3, "label": "c"},
    ]
    assert project_trace(trace, {1}) == [
        {"delay": 1, "process": 1, "label": "a"}
    ]
    assert project_trace(trace, 2) == [
        {"delay": 2, "process": 2, "label": "b"}
    ]
    assert project_trace(trace, {3}) == [
        {"delay": 2, "process": 3, "label": "c"}
    ]
    assert project_trace(trace, {1, 2}) == [
        {"delay": 1, "process": 1, "label": "a"},
        {"delay": 1, "process": 2, "label": "b"},
    ]


def test_project_witness_per_process(fig1):
    steps = witness_region_path(fig1, 3, "serr", slot_cap=2)
    trace = concretize(fig1, 3, steps)
    proj3 = project_trace(trace, {3})
    assert [e["label"] for e in proj3] == ["s4", "serr"]
    assert [e["delay"] for e in proj3] == [2, 0]


def test_simulate_trace_rejects_bad_traces(fig1):
    with pytest.raises(ValueError, match="negative delay"):
        simulate_trace(fig1, 1, [{"delay": -1, "process": 1, "label": "s0"}])
    with pytest.raises(ValueError, match="no enabled transition 's1'"):
        simulate_trace(fig1, 1, [{"delay": 0, "process": 1, "label": "s1"}])
    # serr needs a done witness; alone it must fail
    with pytest.raises(ValueError, match="no enabled transition"):
        simulate_trace(
            fig1, 1,
            [{"delay": 0, "process": 1, "label": "s0"},
             {"delay": 0, "process": 1, "label": "s1"},
             {"delay": Fraction(1, 2), "process": 1, "label": "serr"}],
        )
    # post has invariant c <= 1, so waiting 2 breaks it
    with pytest.raises(ValueError, match="invariant of post broken by delay"):
        simulate_trace(
            fig1, 1,
            [{"delay": 0, "process": 1, "label": "s0"},
             {"delay": 0, "process": 1, "label": "s1"},
             {"delay": 2, "process": 1, "label": "s2"}],
        )


def test_simulate_trace_snapshots(fig1):
    snaps = simulate_trace(
        fig1, 2,
        [{"delay": 0, "process": 1, "label": "s0"},
         {"delay": Fraction(1, 2), "process": 1, "label": "s1"},
         {"delay": Fraction(1, 2), "process": 2, "label": "s4"}],
    )
    assert snaps == [
        (0, ("init", "init")),
        (0, ("listen", "init")),
        (Fraction(1, 2), ("post", "init")),
        (1, ("post", "reading")),
    ]
