from fractions import Fraction

import pytest

from dpnrepair import fixture, model
from dpnrepair.constraints import Var, evaluate
from dpnrepair.generator import generate
from dpnrepair.oracle import _Explicit, net_constants, region_domain
from dpnrepair.statespace import (
    DEAD,
    GREEN,
    RED,
    SymbolicState,
    Unbounded,
    build_ccg,
    build_cover_graph,
    build_lts,
    symbolic_successor,
    to_dot,
)
from dpnrepair.transform import add_tau, refine


def test_sequence_lts_has_two_nodes():
    g = build_lts(fixture("sequence"))
    assert len(g.nodes) == 2 and g.edges == [(0, "t", 1)]
    assert g.status[1] == DEAD


def test_casino_ccg_is_all_green(casino):
    g = build_ccg(casino)
    assert g.red_count() == 0
    assert g.summary() == {"nodes": 10, "edges": 11, "green": 10, "red": 0, "strict_covers": 0}


def test_casino_tau_ccg_has_one_red_state(casino):
    net = add_tau(refine(casino).net)
    g = build_ccg(casino, net)
    reds = [n for i, n in enumerate(g.nodes) if g.color[i] == RED]
    assert len(reds) == 1
    (red,) = reds
    assert casino.marking_dict(red.marking) == {"p2": 1}
    # 0 < age <= 18 with no pass: registering is impossible there
    assert evaluate(red.constraint, {Var("age"): Fraction(10), Var("hasPass"): Fraction(0)})
    assert not evaluate(red.constraint, {Var("age"): Fraction(20), Var("hasPass"): Fraction(0)})
    crit = [(s, t, d) for s, t, d in g.edges if g.color[s] == GREEN and g.color[d] == RED]
    assert [t for _, t, _ in crit] == ["tau_RP"]


def test_strict_cover_marks_unboundedness(unbounded):
    g = build_cover_graph(unbounded)
    assert g.has_strict_cover
    with pytest.raises(Unbounded):
        build_lts(unbounded)


def test_overshoot_colouring_of_improper_termination():
    inst = fixture("irreparable_bounded")
    assert build_ccg(inst).red_count() == 0
    g = build_ccg(inst, overshoot_red=True)
    assert g.green_count() == 1  # only the final state itself


def test_symbolic_successor_frame_rule(casino):
    init = SymbolicState(casino.initial_marking, build_lts(casino).nodes[0].constraint)
    nxt = symbolic_successor(casino.net, init, "EC")
    assert casino.marking_dict(nxt.marking) == {"p1": 1}
    assert evaluate(nxt.constraint, {Var("age"): Fraction(1), Var("hasPass"): Fraction(1)})
    assert not evaluate(nxt.constraint, {Var("age"): Fraction(0), Var("hasPass"): Fraction(1)})
    assert symbolic_successor(casino.net, init, "Q") is None


def test_dot_export(casino):
    net = add_tau(casino.net)
    g = build_ccg(casino, net)
    crit = [(s, t, d) for s, t, d in g.edges if g.color[s] == GREEN and g.color[d] == RED]
    dot = to_dot(g, casino.final_marking, crit)
    assert dot.startswith("digraph ccg {")
    assert "doublecircle" in dot and "salmon" in dot and "color=red" in dot
    assert dot == to_dot(build_ccg(casino, add_tau(casino.net)), casino.final_marking, crit)


@pytest.mark.parametrize("name", ["casino", "livelock", "behavior_loss", "irreparable_concurrent"])
def test_symbolic_states_cover_concrete_ones(name):
    _check_cover(fixture(name))


@pytest.mark.parametrize("seed", range(12))
def test_symbolic_states_cover_concrete_ones_generated(seed):
    inst = generate(3 + seed % 5, seed)
    g = build_cover_graph(inst)
    if g.has_strict_cover:
        pytest.skip("unbounded")
    _check_cover(inst)


def _check_cover(inst):
    """Every concrete state lies in a symbolic state with the same marking and back."""
    g = build_lts(inst)
    ex = _Explicit(inst, region_domain(net_constants(inst)))
    seen = {ex.initial()}
    stack = [ex.initial()]
    while stack:
        s = stack.pop()
        for _, _, nxt in ex.moves(s):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    places = inst.net.places
    sym = {}
    for n in g.nodes:
        sym.setdefault(n.marking, []).append(n.constraint)
    concrete_markings = set()
    for m, val in seen:
        md = dict(m)
        mk = tuple(md.get(p, 0) for p in places)
        concrete_markings.add(mk)
        env = {Var(v): x for v, x in val}
        assert any(evaluate(c, env) for c in sym.get(mk, ())), (md, val)
    assert concrete_markings == set(sym)
