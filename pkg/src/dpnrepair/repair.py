"""Soundness verification and repair by guard restriction.

Repair runs in three phases.  The first makes the net bounded by restricting
the transitions that lead into red parts of its coloured coverability graph.
The second repeatedly restricts the transitions entering red states of the
graph built from the refined net extended with silent transitions, until all
nodes are green.  The third drops transitions that never fire, places that
lost all arcs, and folds split transitions back into their origin.

On failure the input net is returned unchanged.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field

from .constraints import (
    READ,
    WRITE,
    Constraint,
    Var,
    conjoin,
    disjoin,
    equivalent,
    negate,
    rename,
    simplify,
)
from .model import (
    NetInstance,
    merge_split_transitions,
    remove_dead_transitions,
    remove_isolated_places,
    to_dict,
)
from .statespace import GREEN, RED, StateGraph, build_ccg, build_cover_graph
from .transform import add_tau, refine, strip_tau, tau_ids

log = logging.getLogger(__name__)


class IterationLimit(Exception):
    """Raised when repair exceeds its iteration budget."""


@dataclass(frozen=True)
class CriticalArc:
    src: int
    tid: str
    dst: int

    def __str__(self):
        return f"(s{self.src}, {self.tid}, s{self.dst})"


@dataclass
class Verdict:
    sound: bool
    c1: bool
    c2: bool
    c3: bool
    unbounded: bool = False
    reasons: list = field(default_factory=list)
    dead_transitions: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sound": self.sound,
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "unbounded": self.unbounded,
            "reasons": list(self.reasons),
            "dead_transitions": list(self.dead_transitions),
        }


@dataclass
class RepairReport:
    success: bool
    result: NetInstance
    iterations: list = field(default_factory=list)
    removed_transitions: list = field(default_factory=list)
    removed_places: list = field(default_factory=list)
    failure: str | None = None
    verdict: Verdict | None = None
    seconds: float = 0.0

    @property
    def restrictions(self) -> int:
        return sum(len(it["restricted"]) for it in self.iterations)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "failure": self.failure,
            "seconds": round(self.seconds, 6),
            "iterations": self.iterations,
            "removed_transitions": self.removed_transitions,
            "removed_places": self.removed_places,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "result": to_dict(self.result),
        }


def critical_arcs(g: StateGraph) -> list:
    arcs = {CriticalArc(s, t, d) for s, t, d in g.edges if g.color.get(s) == GREEN and g.color.get(d) == RED}
    return sorted(arcs, key=lambda a: (a.src, a.tid, a.dst))


def _tau_closure(g: StateGraph, start: int, taus: frozenset) -> set:
    """Nodes from which ``start`` is reachable through silent edges only."""
    pred = g.pred()
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        for s, t in pred[n]:
            if t in taus and s not in seen:
                seen.add(s)
                queue.append(s)
    return seen


def _guard_scheme(writes: frozenset):
    return lambda v: Var(v.name, WRITE if v.name in writes else READ)


def make_repair_step(inst: NetInstance, g: StateGraph, taus: frozenset = frozenset()):
    """Restrict guards so that no critical arc of ``g`` can be taken.

    Returns the restricted instance and a list of (transition id, conjoined
    constraint) pairs.
    """
    net = inst.net
    pending: dict = {}
    closures: dict = {}
    for arc in critical_arcs(g):
        bad = negate(g.nodes[arc.dst].constraint)
        if arc.tid not in taus:
            targets = [(arc.tid, bad)]
        else:
            # silent arcs are cut where the system enters their source
            if arc.src not in closures:
                closures[arc.src] = _tau_closure(g, arc.src, taus)
            region = closures[arc.src]
            targets = [(t, bad) for s, t, d in g.edges if d in region and t not in taus]
        for tid, c in targets:
            t = net.transition(tid)
            c = rename(c, _guard_scheme(t.writes))
            bucket = pending.setdefault(tid, [])
            if c not in bucket:
                bucket.append(c)
    restricted = []
    for tid in sorted(pending):
        t = net.transition(tid)
        guard = conjoin(t.guard, *pending[tid])
        if guard == t.guard or equivalent(guard, t.guard):
            continue
        net = net.replace_guard(tid, guard)
        restricted.append((tid, conjoin(*pending[tid])))
    return inst.with_net(net), restricted


def _default_cap(inst: NetInstance) -> int:
    atoms = sum(len(k) for t in inst.net.transitions for k in t.guard.dnf) or 1
    return 16 * max(1, len(inst.net.transitions)) * atoms


def _record(report, phase, k, g, refined, restricted):
    report.iterations.append(
        {
            "phase": phase,
            "iteration": k,
            "refined": refined,
            "ccg": g.summary(),
            "critical_arcs": [str(a) for a in critical_arcs(g)],
            "restricted": [{"transition": tid, "conjoined": str(c)} for tid, c in restricted],
        }
    )


def _fail(report: RepairReport, original: NetInstance, why: str, t0: float) -> RepairReport:
    log.info("repair failed: %s", why)
    report.success = False
    report.failure = why
    report.result = original
    report.seconds = time.perf_counter() - t0
    return report


def repair_dpn(
    inst: NetInstance,
    *,
    postpone_refinement: bool = True,
    max_iterations: int | None = None,
    simplify_guards: bool = False,
    verify: bool = True,
    max_nodes: int = 200_000,
) -> RepairReport:
    """Try to make ``inst`` sound by restricting its guards."""
    t0 = time.perf_counter()
    cap = max_iterations if max_iterations is not None else _default_cap(inst)
    report = RepairReport(False, inst)
    current = inst

    # phase 1: boundedness
    k = 0
    while True:
        k += 1
        if k > cap:
            raise IterationLimit(f"bounding phase exceeded {cap} iterations")
        g = build_ccg(current, overshoot_red=True, max_nodes=max_nodes)
        if g.green_count() == 0:
            _record(report, "bound", k, g, False, [])
            return _fail(report, inst, "no green state in the coverability graph", t0)
        if k > 1 and not g.has_strict_cover:
            break
        nxt, restricted = make_repair_step(current, g)
        _record(report, "bound", k, g, False, restricted)
        if not restricted:
            if g.has_strict_cover:
                return _fail(report, inst, "cannot bound the net", t0)
            break
        current = nxt

    # phase 2: deadlocks and livelocks
    # ``stable`` means refining the current net would not split anything
    stable = False
    final_graph = None
    for k in range(1, cap + 1):
        refined = not stable and (k == 1 or not postpone_refinement)
        if refined:
            current = refine(current, max_nodes=max_nodes)
            stable = True
        tnet = add_tau(current.net)
        g = build_ccg(current, tnet, overshoot_red=True, max_nodes=max_nodes)
        if g.green_count() == 0:
            _record(report, "repair", k, g, refined, [])
            return _fail(report, inst, "all states red", t0)
        if g.red_count() == 0:
            _record(report, "repair", k, g, refined, [])
            if not stable:
                again = refine(current, max_nodes=max_nodes)
                stable = True
                if again.net != current.net:
                    current = again
                    continue
            final_graph = g
            break
        nxt, restricted = make_repair_step(current, g, tau_ids(tnet))
        _record(report, "repair", k, g, refined, restricted)
        if not restricted:
            return _fail(report, inst, "no restriction removes the remaining critical arcs", t0)
        current = nxt
        stable = False
    else:
        raise IterationLimit(f"repair phase exceeded {cap} iterations")

    # phase 3: clean-up
    live = {t for t in final_graph.labels() if t not in tau_ids(final_graph.net)}
    net = strip_tau(current.net)
    report.removed_transitions = sorted(t.id for t in net.transitions if t.id not in live)
    net = merge_split_transitions(remove_dead_transitions(net, live))
    before = set(net.places)
    result = remove_isolated_places(current.with_net(net))
    report.removed_places = sorted(before - set(result.net.places))
    if simplify_guards:
        result = simplify_in_context(result, changed_only=inst)
    report.success = True
    report.result = result
    if verify:
        report.verdict = verify_soundness(result, max_nodes=max_nodes)
    report.seconds = time.perf_counter() - t0
    return report


def firing_context(inst: NetInstance, tid: str, g: StateGraph | None = None) -> Constraint:
    """Read-namespace disjunction of the states in which ``tid`` is token-enabled."""
    from .model import enabled_by_tokens

    g = g or build_cover_graph(inst)
    parts = [
        rename(n.constraint, lambda v: Var(v.name, READ))
        for n in g.nodes
        if enabled_by_tokens(inst.net, n.marking, tid)
    ]
    return disjoin(*parts)


def simplify_in_context(inst: NetInstance, changed_only: NetInstance | None = None) -> NetInstance:
    """Simplify guards relative to the valuations reachable where they are checked.

    With ``changed_only`` guards identical to the ones in that instance are
    left alone.
    """
    g = build_cover_graph(inst)
    if g.has_strict_cover:
        return inst
    untouched = {}
    if changed_only is not None:
        untouched = {t.id: t.guard for t in changed_only.net.transitions}
    net = inst.net
    for t in inst.net.transitions:
        if untouched.get(t.id) == t.guard:
            continue
        ctx = firing_context(inst, t.id, g)
        net = net.replace_guard(t.id, simplify(t.guard, ctx))
    return inst.with_net(net)


def verify_soundness(inst: NetInstance, *, max_nodes: int = 200_000) -> Verdict:
    """Decide data-aware soundness from symbolic state spaces."""
    cg = build_ccg(inst, max_nodes=max_nodes)
    originals = {t.base_id for t in inst.net.transitions if not t.is_tau}
    if cg.has_strict_cover:
        fired = {inst.net.transition(t).base_id for t in cg.labels()}
        over = any(_overshoots(n.marking, inst.final_marking) for n in cg.nodes)
        dead = sorted(originals - fired)
        return Verdict(
            False, False, not over, not dead, True,
            ["unbounded: a reachable state strictly covers an earlier one"],
            dead,
        )
    refined = refine(inst, max_nodes=max_nodes)
    tnet = add_tau(refined.net)
    g = build_ccg(refined, tnet, max_nodes=max_nodes)
    reasons = []
    c1 = g.red_count() == 0
    if not c1:
        reasons.append(f"final marking unreachable from {g.red_count()} symbolic state(s)")
    over = [i for i, n in enumerate(g.nodes) if _overshoots(n.marking, inst.final_marking)]
    c2 = not over
    if not c2:
        reasons.append("a reachable marking strictly covers the final marking")
    fired = {tnet.transition(t).base_id for t in g.labels() if not tnet.transition(t).is_tau}
    dead = sorted(originals - fired)
    c3 = not dead
    if not c3:
        reasons.append("dead transition(s): " + ", ".join(dead))
    return Verdict(c1 and c2 and c3, c1, c2, c3, False, reasons, dead)


def _overshoots(m: tuple, final: tuple) -> bool:
    return m != final and all(x >= y for x, y in zip(m, final))
