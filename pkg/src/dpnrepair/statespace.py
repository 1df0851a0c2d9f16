"""Symbolic state spaces: induced LTS, coverability graph and its colouring.

A symbolic state pairs a marking with a constraint over plain variables that
describes the valuations reachable at that marking along the discovering
path.  Nodes with equal markings and equivalent constraints are merged.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .constraints import (
    PLAIN,
    READ,
    WRITE,
    Constraint,
    Var,
    atom,
    conjoin,
    eliminate,
    equivalent,
    rename,
)
from .model import Dpn, NetInstance, enabled_by_tokens, fmt_marking, next_marking

log = logging.getLogger(__name__)

DEAD = "dead"
LIVE = "live"
GREEN = "green"
RED = "red"


class Unbounded(Exception):
    """Raised when a full LTS is requested for a net with a strict cover."""


class GraphTooLarge(Exception):
    pass


@dataclass(frozen=True)
class SymbolicState:
    marking: tuple
    constraint: Constraint


@dataclass
class StateGraph:
    """LTS / coverability graph over symbolic states (node ids are ints)."""

    net: Dpn
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (src, tid, dst)
    status: dict = field(default_factory=dict)
    color: dict = field(default_factory=dict)
    covering: set = field(default_factory=set)  # nodes dead by strict cover
    initial: int = 0

    def succ(self) -> dict:
        out = {i: [] for i in range(len(self.nodes))}
        for s, t, d in self.edges:
            out[s].append((t, d))
        return out

    def pred(self) -> dict:
        inc = {i: [] for i in range(len(self.nodes))}
        for s, t, d in self.edges:
            inc[d].append((s, t))
        return inc

    @property
    def has_strict_cover(self) -> bool:
        return bool(self.covering)

    def green_count(self) -> int:
        return sum(1 for c in self.color.values() if c == GREEN)

    def red_count(self) -> int:
        return sum(1 for c in self.color.values() if c == RED)

    def summary(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "green": self.green_count(),
            "red": self.red_count(),
            "strict_covers": len(self.covering),
        }

    def labels(self) -> set:
        return {t for _, t, _ in self.edges}


def initial_constraint(inst: NetInstance) -> Constraint:
    return conjoin(*(atom(Var(v), "=", inst.initial_valuation[v]) for v in inst.net.variables))


class _Successors:
    """Memoised symbolic firing for one net."""

    def __init__(self, net: Dpn):
        self.net = net
        self.cache: dict = {}
        self.to_read: dict = {}
        self.info = {}
        for t in net.transitions:
            drop = [Var(v, READ) for v in t.writes]
            back = {}
            for v in net.variables:
                back[Var(v, READ)] = Var(v, PLAIN)
                back[Var(v, WRITE)] = Var(v, PLAIN)
            self.info[t.id] = (t.guard, drop, back)

    def readable(self, c: Constraint) -> Constraint:
        r = self.to_read.get(c)
        if r is None:
            r = rename(c, lambda v: Var(v.name, READ))
            self.to_read[c] = r
        return r

    def __call__(self, c: Constraint, tid: str) -> Constraint | None:
        key = (c, tid)
        if key in self.cache:
            return self.cache[key]
        guard, drop, back = self.info[tid]
        res = conjoin(self.readable(c), guard)
        if res.is_false():
            out = None
        else:
            res = eliminate(res, drop)
            out = rename(res, back)
            if out.is_false():
                out = None
        self.cache[key] = out
        return out


def symbolic_successor(net: Dpn, state: SymbolicState, tid: str) -> SymbolicState | None:
    if not enabled_by_tokens(net, state.marking, tid):
        return None
    c = _Successors(net)(state.constraint, tid)
    if c is None:
        return None
    return SymbolicState(next_marking(net, state.marking, tid), c)


def _strictly_below(a: tuple, b: tuple) -> bool:
    return a != b and all(x <= y for x, y in zip(a, b))


class _Classes:
    """Equivalence classes of constraints, keyed syntactically first."""

    def __init__(self):
        self.ids: dict = {}
        self.reps: list = []

    def __call__(self, c: Constraint) -> int:
        cid = self.ids.get(c)
        if cid is None:
            for k, r in enumerate(self.reps):
                if equivalent(r, c):
                    cid = k
                    break
            else:
                cid = len(self.reps)
                self.reps.append(c)
            self.ids[c] = cid
        return cid


def build_cover_graph(
    inst: NetInstance,
    net: Dpn | None = None,
    *,
    max_nodes: int = 200_000,
    fail_on_cover: bool = False,
) -> StateGraph:
    """Coverability graph by breadth-first symbolic expansion.

    A new node is dead when it strictly covers an ancestor on the path along
    which it was first discovered (same constraint up to equivalence,
    strictly larger marking) or when it has no successor; dead nodes are not
    expanded.
    """
    net = net or inst.net
    fire = _Successors(net)
    classes = _Classes()
    g = StateGraph(net)
    index: dict = {}  # (marking, class id) -> node id
    parent: list = []
    cls: list = []
    moves = [(t.id, net.pre_vector(t.id), net.post_vector(t.id)) for t in net.transitions]

    def covers(m: tuple, cid: int, a: int) -> bool:
        while a >= 0:
            if cls[a] == cid and _strictly_below(g.nodes[a].marking, m):
                return True
            a = parent[a]
        return False

    init = SymbolicState(inst.initial_marking, initial_constraint(inst))
    g.nodes.append(init)
    parent.append(-1)
    cls.append(classes(init.constraint))
    index[(init.marking, cls[0])] = 0
    queue = deque([0])
    edge_set = set()
    while queue:
        nid = queue.popleft()
        node = g.nodes[nid]
        m = node.marking
        succs = []
        for tid, pre, post in moves:
            if any(m[i] < w for i, w in pre):
                continue
            c = fire(node.constraint, tid)
            if c is not None:
                nm = list(m)
                for i, w in pre:
                    nm[i] -= w
                for i, w in post:
                    nm[i] += w
                succs.append((tid, tuple(nm), c))
        if not succs:
            g.status[nid] = DEAD
            continue
        g.status[nid] = LIVE
        for tid, nm, c in succs:
            cid = classes(c)
            target = index.get((nm, cid))
            if target is None:
                target = len(g.nodes)
                if target >= max_nodes:
                    raise GraphTooLarge(f"more than {max_nodes} symbolic states")
                g.nodes.append(SymbolicState(nm, c))
                parent.append(nid)
                cls.append(cid)
                if covers(nm, cid, nid):
                    if fail_on_cover:
                        raise Unbounded(fmt_marking(net.places, nm))
                    g.status[target] = DEAD
                    g.covering.add(target)
                else:
                    queue.append(target)
                index[(nm, cid)] = target
            e = (nid, tid, target)
            if e not in edge_set:
                edge_set.add(e)
                g.edges.append(e)
    return g


def build_lts(inst: NetInstance, net: Dpn | None = None, **kw) -> StateGraph:
    """Full LTS of a bounded net; raises :class:`Unbounded` otherwise."""
    return build_cover_graph(inst, net, fail_on_cover=True, **kw)


def colorize(g: StateGraph, final_marking: tuple, *, overshoot_red: bool = False) -> StateGraph:
    """Colour nodes green when they can reach the final marking.

    With ``overshoot_red`` nodes whose marking strictly covers the final
    marking never turn green (they witness improper termination).
    """
    def bad(i):
        return overshoot_red and _strictly_below(final_marking, g.nodes[i].marking)

    green = {i for i, n in enumerate(g.nodes) if n.marking == final_marking}
    pred = g.pred()
    queue = deque(green)
    while queue:
        n = queue.popleft()
        for s, _ in pred[n]:
            if s not in green and not bad(s):
                green.add(s)
                queue.append(s)
    g.color = {i: GREEN if i in green else RED for i in range(len(g.nodes))}
    return g


def build_ccg(inst: NetInstance, net: Dpn | None = None, **kw) -> StateGraph:
    overshoot = kw.pop("overshoot_red", False)
    return colorize(build_cover_graph(inst, net, **kw), inst.final_marking, overshoot_red=overshoot)


def to_dot(g: StateGraph, final_marking: tuple | None = None, critical: Iterable = ()) -> str:
    places = g.net.places
    crit = set(critical)
    lines = ["digraph ccg {", "  rankdir=LR;", '  node [style=filled, fillcolor=white, fontname="Helvetica"];']
    for i, n in enumerate(g.nodes):
        label = f"s{i}\\n{fmt_marking(places, n.marking)} | {n.constraint}".replace('"', '\\"')
        attrs = [f'label="{label}"']
        if final_marking is not None and n.marking == final_marking:
            attrs.append("shape=doublecircle")
        else:
            attrs.append("shape=ellipse")
        if i in g.color:
            attrs.append(f"fillcolor={'palegreen' if g.color[i] == GREEN else 'salmon'}")
        if g.status.get(i) == DEAD:
            attrs.append("peripheries=2" if "shape=doublecircle" not in attrs else "penwidth=2")
        lines.append(f"  s{i} [{', '.join(attrs)}];")
    for s, t, d in g.edges:
        label = g.net.transition(t).label if g.net.has_transition(t) else t
        extra = ", color=red, fontcolor=red, penwidth=2" if (s, t, d) in crit else ""
        lines.append(f'  s{s} -> s{d} [label="{label}"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
