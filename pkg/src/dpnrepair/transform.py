"""Net transformations used before deadlock and livelock detection.

``refine`` splits transitions lying on LTS cycles by the input conditions of
the transitions that leave those cycles, until nothing changes.  ``add_tau``
adds, for every transition with a non-trivial input condition, a silent
transition that can only fire where the original one is data-disabled.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import networkx as nx

from .constraints import READ, WRITE, Constraint, Var, conjoin, eliminate, negate, rename
from .model import Dpn, NetInstance, Transition
from .statespace import build_lts

log = logging.getLogger(__name__)


class RefinementDiverged(Exception):
    pass


@dataclass
class RefinementPlan:
    rounds: int = 0
    cycles: int = 0
    approximated: bool = False
    # new transition id -> (split source id, condition, polarity)
    splits: dict = field(default_factory=dict)


def input_condition(t: Transition) -> Constraint:
    """Read-only condition under which ``t`` can fire for some written values."""
    return eliminate(t.guard, [Var(v, WRITE) for v in t.writes])


def _is_trivial(c: Constraint) -> bool:
    return c.is_false() or negate(c).is_false()


def _cycle_node_sets(lts, cap: int):
    """Elementary cycles as (node set, edge list); ``None`` past ``cap``."""
    g = nx.DiGraph()
    g.add_nodes_from(range(len(lts.nodes)))
    by_pair: dict = {}
    for s, t, d in lts.edges:
        g.add_edge(s, d)
        by_pair.setdefault((s, d), []).append(t)
    out = []
    for cyc in nx.simple_cycles(g):
        if len(out) >= cap:
            return None, by_pair
        pairs = list(zip(cyc, cyc[1:] + cyc[:1]))
        out.append((frozenset(cyc), pairs))
    return out, by_pair


def _scc_cycles(lts, by_pair):
    g = nx.DiGraph()
    g.add_nodes_from(range(len(lts.nodes)))
    g.add_edges_from(by_pair)
    out = []
    for comp in nx.strongly_connected_components(g):
        pairs = [(s, d) for (s, d) in by_pair if s in comp and d in comp]
        if pairs:
            out.append((frozenset(comp), pairs))
    return out


def _split_conditions(net: Dpn, lts, cycle_cap: int, plan: RefinementPlan) -> dict:
    cycles, by_pair = _cycle_node_sets(lts, cycle_cap)
    if cycles is None:
        log.warning("more than %d LTS cycles; refining per strongly connected component", cycle_cap)
        plan.approximated = True
        cycles = _scc_cycles(lts, by_pair)
    plan.cycles += len(cycles)
    out_edges: dict = {}
    for s, t, d in lts.edges:
        out_edges.setdefault(s, []).append((t, d))
    conds: dict = {}
    for nodes, pairs in cycles:
        on_cycle = {t for p in pairs for t in by_pair[p]}
        writers = [net.transition(t) for t in sorted(on_cycle) if net.transition(t).writes]
        if not writers:
            continue
        exits = sorted({t for n in nodes for t, d in out_edges.get(n, ()) if d not in nodes})
        for t in writers:
            for tout in exits:
                cond = input_condition(net.transition(tout))
                if _is_trivial(cond):
                    continue
                cond = rename(cond, lambda v, w=t.writes: Var(v.name, WRITE if v.name in w else READ))
                plus = conjoin(t.guard, cond)
                minus = conjoin(t.guard, negate(cond))
                if plus.is_false() or minus.is_false():
                    continue
                bucket = conds.setdefault(t.id, [])
                if cond not in bucket:
                    bucket.append(cond)
    return conds


def _fresh_id(net: Dpn, base: str, counters: dict) -> str:
    while True:
        counters[base] = counters.get(base, 0) + 1
        cand = f"{base}#{counters[base]}"
        if not net.has_transition(cand):
            return cand


def refine(
    inst: NetInstance,
    *,
    max_rounds: int = 64,
    cycle_cap: int = 2000,
    max_nodes: int = 200_000,
    plan: RefinementPlan | None = None,
) -> NetInstance:
    """Split cycle transitions until the net stabilises.

    Raises :class:`~dpnrepair.statespace.Unbounded` for unbounded nets.
    """
    plan = plan if plan is not None else RefinementPlan()
    net = inst.net
    counters: dict = {}
    for t in net.transitions:
        if "#" in t.id:
            base, _, k = t.id.rpartition("#")
            if k.isdigit():
                counters[base] = max(counters.get(base, 0), int(k))
    for _ in range(max_rounds):
        lts = build_lts(inst.with_net(net), max_nodes=max_nodes)
        conds = _split_conditions(net, lts, cycle_cap, plan)
        plan.rounds += 1
        if not conds:
            return inst.with_net(net)
        transitions, pre, post = [], dict(net.pre), dict(net.post)
        for t in net.transitions:
            if t.id not in conds:
                transitions.append(t)
                continue
            cond = sorted(conds[t.id], key=str)[0]
            origin = t.base_id
            for guard, pol in ((conjoin(t.guard, cond), "+"), (conjoin(t.guard, negate(cond)), "-")):
                nid = _fresh_id(net, origin, counters)
                transitions.append(replace(t, id=nid, origin=origin).with_guard(guard))
                pre[nid] = net.pre.get(t.id, ())
                post[nid] = net.post.get(t.id, ())
                plan.splits[nid] = (t.id, cond, pol)
            log.debug("split %s on %s", t.id, cond)
        net = net.with_transitions(transitions, pre, post)
    raise RefinementDiverged(f"no fixpoint after {max_rounds} rounds")


def add_tau(net: Dpn) -> Dpn:
    """Add a silent self-loop ``tau_t`` guarded by the negated input condition of ``t``."""
    transitions = list(net.transitions)
    pre, post = dict(net.pre), dict(net.post)
    taken = {t.id for t in transitions}
    for t in net.transitions:
        if t.is_tau or not t.reads:
            continue
        cond = input_condition(t)
        if _is_trivial(cond):
            continue
        tid = f"tau_{t.id}"
        while tid in taken:
            tid += "'"
        taken.add(tid)
        transitions.append(Transition(tid, f"tau_{t.label}", negate(cond), None, t.id))
        pre[tid] = net.pre.get(t.id, ())
        post[tid] = net.pre.get(t.id, ())
    return net.with_transitions(transitions, pre, post)


def strip_tau(net: Dpn) -> Dpn:
    return net.with_transitions(t for t in net.transitions if not t.is_tau)


def tau_ids(net: Dpn) -> frozenset:
    return frozenset(t.id for t in net.transitions if t.is_tau)

