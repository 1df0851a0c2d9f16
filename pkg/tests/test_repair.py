import json

import pytest

from dpnrepair import fixture, model
from dpnrepair.constraints import equivalent
from dpnrepair.guards import parse_guard as P
from dpnrepair.repair import (
    IterationLimit,
    critical_arcs,
    make_repair_step,
    repair_dpn,
    simplify_in_context,
    verify_soundness,
)
from dpnrepair.statespace import build_ccg
from dpnrepair.transform import add_tau, tau_ids


def test_verify_casino_violates_c1(casino):
    v = verify_soundness(casino)
    assert not v.sound and not v.c1 and v.c2 and v.c3


def test_verify_sequence_is_sound():
    assert verify_soundness(fixture("sequence")).sound


def test_verify_reports_each_condition():
    v = verify_soundness(fixture("irreparable_bounded"))
    assert (v.c1, v.c2, v.c3) == (True, False, True)
    v = verify_soundness(fixture("unbounded"))
    assert v.unbounded and not v.sound


def test_silent_critical_arc_restricts_entering_transition(casino):
    net = add_tau(casino.net)
    g = build_ccg(casino, net, overshoot_red=True)
    (arc,) = critical_arcs(g)
    assert arc.tid == "tau_RP"
    out, restricted = make_repair_step(casino.with_net(net), g, tau_ids(net))
    assert [tid for tid, _ in restricted] == ["R"]
    assert equivalent(out.net.transition("R").guard, P("hasPass_r = 0 && (age_r <= 0 || age_r > 18)"))


def test_repair_casino(casino):
    rep = repair_dpn(casino)
    assert rep.success and rep.verdict.sound
    register = rep.result.net.transition("R").guard
    assert equivalent(register, P("hasPass_r = 0 && (age_r <= 0 || age_r > 18)"))
    for t in casino.net.transitions:
        if t.id != "R":
            assert rep.result.net.transition(t.id).guard == t.guard


def test_repair_casino_simplified(casino):
    rep = repair_dpn(casino, simplify_guards=True)
    assert str(rep.result.net.transition("R").guard) == "age_r > 18 && hasPass_r = 0"


def test_repair_livelock_splits_and_merges(livelock):
    rep = repair_dpn(livelock)
    assert rep.success
    assert rep.removed_transitions == ["t3#2"]
    assert rep.result.net.transition("t3").guard == P("b_w >= 3 && a_r < 3")
    steps = [it for it in rep.iterations if it["phase"] == "repair"]
    assert [bool(it["restricted"]) for it in steps] == [True, False]
    assert steps[-1]["ccg"]["red"] == 0


def test_repair_unbounded_in_first_phase(unbounded):
    rep = repair_dpn(unbounded)
    assert rep.success
    assert equivalent(rep.result.net.transition("t2").guard, P("a_r <= 0"))
    assert all(not it["restricted"] for it in rep.iterations if it["phase"] == "repair")


@pytest.mark.parametrize("name", ["irreparable_concurrent", "irreparable_bounded", "irreparable_unbounded"])
def test_irreparable_nets_are_returned_unchanged(name):
    inst = fixture(name)
    rep = repair_dpn(inst)
    assert not rep.success and rep.failure
    assert rep.result is inst


def test_postponement_does_not_change_result(livelock, casino):
    for inst in (livelock, casino):
        a = repair_dpn(inst)
        b = repair_dpn(inst, postpone_refinement=False)
        assert a.success and b.success
        for t in a.result.net.transitions:
            assert equivalent(t.guard, b.result.net.transition(t.id).guard)


def test_iteration_limit(casino):
    with pytest.raises(IterationLimit):
        repair_dpn(casino, max_iterations=1)


def test_report_is_json(casino):
    rep = repair_dpn(casino)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["success"] and doc["verdict"]["sound"]
    assert model.from_dict(doc["result"]).net.transition("R")


def test_simplify_in_context_leaves_reachable_behaviour(casino):
    rep = repair_dpn(casino)
    simp = simplify_in_context(rep.result)
    assert verify_soundness(simp).sound
    assert simp.net.transition("R").guard == P("hasPass_r = 0 && age_r > 18")
