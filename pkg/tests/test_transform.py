from dpnrepair import fixture
from dpnrepair.constraints import equivalent
from dpnrepair.guards import parse_guard as P
from dpnrepair.transform import RefinementPlan, add_tau, input_condition, refine, strip_tau, tau_ids


def test_input_condition_drops_written_variables(casino):
    assert input_condition(casino.net.transition("RP")) == P("age_r > 18")
    assert input_condition(casino.net.transition("EC")).is_true()


def test_tau_transitions_for_read_guards(casino):
    net = add_tau(casino.net)
    assert tau_ids(net) == {"tau_R", "tau_RP", "tau_EGR"}
    tau = net.transition("tau_RP")
    assert tau.tau_of == "RP" and tau.is_tau
    assert equivalent(tau.guard, P("age_r <= 18"))
    assert net.pre["tau_RP"] == net.post["tau_RP"] == casino.net.pre["RP"]
    assert strip_tau(net) == casino.net


def test_livelock_refinement_splits_loop(livelock):
    plan = RefinementPlan()
    r = refine(livelock, plan=plan)
    split = {t.id: t for t in r.net.transitions if t.origin == "t3"}
    assert sorted(split) == ["t3#1", "t3#2"]
    assert split["t3#1"].guard == P("b_w >= 3 && a_r < 3")
    assert split["t3#2"].guard == P("b_w >= 3 && a_r >= 3")
    assert plan.rounds == 2 and not plan.approximated


def test_refinement_is_a_fixpoint(livelock):
    once = refine(livelock)
    assert refine(once).net == once.net


def test_no_split_without_cycles(casino):
    assert refine(fixture("sequence")).net == fixture("sequence").net
    # the casino loops only write values the exit guard Q does not read
    assert refine(casino).net == casino.net
