import pytest

from conftest import random_gta
from dtnmc.dtn_local import (
    apply_loopback,
    approx_equal,
    build_layers,
    check_label_reachable,
    k_product,
    reachable_labels,
    region_to_atoms,
    summary_automaton,
)
from dtnmc.model import BudgetExceeded, parse_model
from dtnmc.regions import T, initial_region


def cproj(layer):
    return {
        (rs.loc, rs.base.eliminate((T,)).pretty() or "true")
        for rs in layer.states.values()
    }


def test_fig3_layer_construction(fig3):
    b = build_layers(fig3)
    assert (b.i0, b.l0, b.shift) == (4, 6, 1)
    assert cproj(b.layers[0]) == {("init", "c=0"), ("q1", "c=0")}
    assert cproj(b.layers[1]) == {
        ("init", "c=0"), ("init", "0<c<1"), ("q1", "c=0"), ("q1", "0<c<1"),
    }
    assert len(b.layers[1].states) == 6  # distinct c/t phase orders collapse in C
    assert cproj(b.layers[2]) == {
        (q, r) for q in ("init", "q1") for r in ("c=0", "0<c<1", "c=1")
    }


def test_fig3_loopback(fig3):
    dra = apply_loopback(build_layers(fig3))
    assert [str(l.slot) for l in dra.layers] == [
        "[0,0]", "(0,1)", "[1,1]", "(1,2)", "[2,2]", "(2,3)",
    ]
    assert sum(len(l.states) for l in dra.layers) == 43
    keys = {rs.key() for l in dra.layers for rs in l.states.values()}
    loops = [e for e in dra.edges if e.kind == "loop"]
    assert loops, "the last boundary must fold back onto W_i0"
    layer_of = {
        rs.key(): l.number for l in dra.layers for rs in l.states.values()
    }
    for e in dra.edges:
        assert e.src.key() in keys and e.dst.key() in keys
        if e.kind == "loop":
            assert layer_of[e.src.key()] == dra.l0 - 1
            assert layer_of[e.dst.key()] == dra.i0


def test_approx_equal(fig3):
    b = build_layers(fig3)
    w4, w6 = b.layers[4], b.layers[6]
    assert approx_equal(w4, w6) == 1  # [2,2] matches [3,3], one slot apart
    assert approx_equal(w4, w4) == 0
    assert approx_equal(b.layers[4], b.layers[5]) is None  # point vs open


def test_check_label_reachable_fig1(fig1):
    out = check_label_reachable(fig1, "serr")
    assert out["result"] == "reachable"
    assert (out["layers_built"], out["states_total"]) == (5, 64)
    steps = out["witness"]
    assert steps[0]["kind"] == "init"
    assert steps[-1]["kind"] == "trans" and steps[-1]["label"] == "serr"
    for s in steps:
        assert set(s) >= {"kind", "loc", "region", "slot"}


def test_check_label_unknown(fig1):
    with pytest.raises(ValueError, match="unknown label 'nosuch'"):
        check_label_reachable(fig1, "nosuch")


def test_budgets(fig3, fig1):
    with pytest.raises(BudgetExceeded, match="cap"):
        build_layers(fig3, cap=2)
    with pytest.raises(BudgetExceeded, match="states"):
        check_label_reachable(fig1, "serr", max_states=10)


def test_reachable_labels(fig1):
    assert reachable_labels(fig1) == {"s0", "s1", "s2", "s4", "s5", "s6", "serr"}
    guarded = parse_model(
        "gta M\nclocks c\nlocation p initial\nlocation q\n"
        "trans p -> q label: a guard: c >= 1 reset: c\n"
        "trans q -> p label: b locguard: q\n"
    )
    # b needs another process in q, and q is reachable, so both labels fire
    assert reachable_labels(guarded) == {"a", "b"}
    lonely = parse_model(
        "gta M\nclocks c\nlocation p initial\nlocation q\nlocation r\n"
        "trans p -> q label: a locguard: r\n"
    )
    # r is never occupied, so the locguard can never find a witness
    assert reachable_labels(lonely) == set()


def test_streaming_agrees_and_holds_one_layer(fig1, fig3):
    cases = [(fig1, l) for l in fig1.labels()]
    for seed in range(6):
        a = random_gta(seed)
        cases.extend((a, l) for l in a.labels())
    for a, label in cases:
        full = check_label_reachable(a, label)
        slim = check_label_reachable(a, label, streaming=True)
        assert slim["result"] == full["result"], (a.name, label)
        assert slim["peak_layers_held"] == 1
        assert slim["witness"] is None


def test_region_to_atoms_characterizes(fig3):
    r0 = initial_region(("c", T), {"c": 1, T: 1})
    atoms = region_to_atoms(r0)
    assert r0.satisfies(atoms)
    succ = r0.delay_successor()
    assert succ.satisfies(region_to_atoms(succ))
    assert not succ.satisfies(atoms)  # the c==0 atom is uniformly false there


def test_summary_automaton_shape(fig3):
    dra = apply_loopback(build_layers(fig3))
    s = summary_automaton(dra)
    assert s.kind == "ta" and s.clocks == ("c",)
    assert len(s.locations) == 43
    assert s.initial == "w0n0"
    locs = set(s.locations)
    internal = {tr.label for tr in dra.automaton.transitions}
    for tr in s.transitions:
        assert tr.src in locs and tr.dst in locs
        assert tr.label is None or tr.label in internal


def test_k_product():
    s = parse_model(
        "gta P\nclocks c\nlocation p initial\nlocation q inv: c <= 2\n"
        "trans p -> q label: go guard: c >= 1 reset: c\n"
    )
    prod = k_product(s, 2)
    assert prod.kind == "ta" and prod.clocks == ("c_p1", "c_p2")
    assert set(prod.locations) == {"p__p", "p__q", "q__p", "q__q"}
    assert prod.initial == "p__p"
    assert len(prod.transitions) == 4
    assert prod.invariants["q__q"] == (
        prod.invariants["q__p"] + prod.invariants["p__q"]
    )
    tr0 = [t for t in prod.transitions if t.src == "p__p"][0]
    assert tr0.guard[0].left in ("c_p1", "c_p2")
    assert tr0.resets == (tr0.guard[0].left,)
    with pytest.raises(BudgetExceeded):
        k_product(s, 4, max_states=3)
