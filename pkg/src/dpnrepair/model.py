"""Data Petri nets: structure, concrete firing, explicit reachability and file I/O."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

from .constraints import (
    PLAIN,
    READ,
    WRITE,
    TRUE,
    Constraint,
    Var,
    disjoin,
    evaluate,
    fmt_number,
    simplify,
)
from .guards import GuardSyntaxError, parse_guard


class ModelError(Exception):
    """Base class for malformed or inconsistent models."""


class ModelSyntaxError(ModelError):
    pass


class UndeclaredIdentifier(ModelError):
    pass


class NamespaceError(ModelError):
    """A guard used a plain variable where only ``_r``/``_w`` are allowed."""


class MissingInitialValue(ModelError):
    pass


class NotEnabled(Exception):
    pass


class GuardViolated(Exception):
    pass


class CapExceeded(Exception):
    pass


class InconsistentSplitGroup(ModelError):
    pass


@dataclass(frozen=True)
class Transition:
    id: str
    label: str
    guard: Constraint
    origin: str | None = None
    tau_of: str | None = None
    # variables written even though the guard no longer mentions them, e.g.
    # after ``x_w >= 1 || x_w < 1`` collapsed to true
    extra_writes: frozenset = frozenset()

    @property
    def reads(self) -> frozenset:
        return frozenset(v.name for v in self.guard.vars() if v.ns == READ)

    @property
    def writes(self) -> frozenset:
        return frozenset(v.name for v in self.guard.vars() if v.ns == WRITE) | self.extra_writes

    def with_guard(self, guard: Constraint) -> "Transition":
        """Same transition under a new guard; the write set never shrinks."""
        mentioned = frozenset(v.name for v in guard.vars() if v.ns == WRITE)
        return replace(self, guard=guard, extra_writes=self.writes - mentioned)

    @property
    def base_id(self) -> str:
        return self.origin or self.id

    @property
    def is_tau(self) -> bool:
        return self.tau_of is not None


@dataclass(frozen=True)
class Dpn:
    places: tuple
    transitions: tuple
    variables: tuple
    # transition id -> ((place, weight), ...)
    pre: Mapping = field(default_factory=dict)
    post: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t.id: t for t in self.transitions})
        object.__setattr__(self, "_pidx", {p: i for i, p in enumerate(self.places)})

    def transition(self, tid: str) -> Transition:
        return self._index[tid]

    def place_index(self, p: str) -> int:
        return self._pidx[p]

    def has_transition(self, tid: str) -> bool:
        return tid in self._index

    def pre_vector(self, tid: str) -> tuple:
        return tuple((self._pidx[p], w) for p, w in self.pre.get(tid, ()))

    def post_vector(self, tid: str) -> tuple:
        return tuple((self._pidx[p], w) for p, w in self.post.get(tid, ()))

    def with_transitions(self, transitions: Iterable[Transition], pre=None, post=None) -> "Dpn":
        transitions = tuple(transitions)
        ids = {t.id for t in transitions}
        pre = dict(self.pre if pre is None else pre)
        post = dict(self.post if post is None else post)
        return Dpn(
            self.places,
            transitions,
            self.variables,
            {k: v for k, v in pre.items() if k in ids},
            {k: v for k, v in post.items() if k in ids},
        )

    def replace_guard(self, tid: str, guard: Constraint) -> "Dpn":
        return self.with_transitions(
            t.with_guard(guard) if t.id == tid else t for t in self.transitions
        )


@dataclass(frozen=True)
class NetInstance:
    net: Dpn
    initial_marking: tuple
    initial_valuation: Mapping  # name -> Fraction
    final_marking: tuple

    def marking_dict(self, m: tuple) -> dict:
        return {p: c for p, c in zip(self.net.places, m) if c}

    def with_net(self, net: Dpn) -> "NetInstance":
        if net.places == self.net.places:
            return replace(self, net=net)
        old = self.marking_dict
        mi, mf = old(self.initial_marking), old(self.final_marking)
        return NetInstance(
            net,
            tuple(mi.get(p, 0) for p in net.places),
            self.initial_valuation,
            tuple(mf.get(p, 0) for p in net.places),
        )


def fmt_marking(places: tuple, m: tuple) -> str:
    parts = []
    for p, c in zip(places, m):
        if c == 1:
            parts.append(p)
        elif c:
            parts.append(f"{c}{p}")
    return "[" + ",".join(parts) + "]"


# ---------------------------------------------------------------------------
# concrete semantics


def enabled_by_tokens(net: Dpn, marking: tuple, tid: str) -> bool:
    return all(marking[i] >= w for i, w in net.pre_vector(tid))


def next_marking(net: Dpn, marking: tuple, tid: str) -> tuple:
    m = list(marking)
    for i, w in net.pre_vector(tid):
        m[i] -= w
    for i, w in net.post_vector(tid):
        m[i] += w
    return tuple(m)


def binding(valuation: Mapping, writes: Mapping) -> dict:
    beta = {Var(v, READ): Fraction(x) for v, x in valuation.items()}
    for v, x in valuation.items():
        beta[Var(v, WRITE)] = Fraction(writes.get(v, x))
    return beta


def fire(inst: NetInstance, state: tuple, tid: str, writes: Mapping | None = None) -> tuple:
    """Fire ``tid`` from ``state = (marking, valuation)``.

    ``writes`` gives the new values of the written variables; variables the
    guard does not write keep their value.
    """
    net = inst.net
    marking, valuation = state
    writes = dict(writes or {})
    t = net.transition(tid)
    if not enabled_by_tokens(net, marking, tid):
        raise NotEnabled(tid)
    extra = set(writes) - t.writes
    if extra:
        raise GuardViolated(f"{tid} does not write {sorted(extra)}")
    if set(t.writes) - set(writes):
        raise GuardViolated(f"{tid} needs values for {sorted(set(t.writes) - set(writes))}")
    beta = binding(valuation, writes)
    if not evaluate(t.guard, beta):
        raise GuardViolated(tid)
    new_val = dict(valuation)
    for v in t.writes:
        new_val[v] = Fraction(writes[v])
    return next_marking(net, marking, tid), new_val


@dataclass
class ReachGraph:
    nodes: set
    edges: set
    initial: tuple


def _freeze(state):
    m, val = state
    return (m, tuple(sorted(val.items())))


def build_reach_graph(inst: NetInstance, value_domain: Iterable, node_cap: int = 10_000) -> ReachGraph:
    """Explicit reachability graph with written values drawn from ``value_domain``."""
    domain = sorted({Fraction(x) for x in value_domain})
    if not domain:
        raise ValueError("empty value domain")
    net = inst.net
    init = _freeze((inst.initial_marking, dict(inst.initial_valuation)))
    nodes = {init}
    edges = set()
    queue = deque([init])
    while queue:
        node = queue.popleft()
        m, val = node[0], dict(node[1])
        for t in net.transitions:
            if not enabled_by_tokens(net, m, t.id):
                continue
            ws = sorted(t.writes)
            for vals in product(domain, repeat=len(ws)):
                writes = dict(zip(ws, vals))
                if not evaluate(t.guard, binding(val, writes)):
                    continue
                nv = dict(val)
                nv.update(writes)
                succ = _freeze((next_marking(net, m, t.id), nv))
                edges.add((node, t.id, succ))
                if succ not in nodes:
                    if len(nodes) >= node_cap:
                        raise CapExceeded(f"more than {node_cap} states")
                    nodes.add(succ)
                    queue.append(succ)
    return ReachGraph(nodes, edges, init)


# ---------------------------------------------------------------------------
# structural edits


def remove_dead_transitions(net: Dpn, live_ids: Iterable[str]) -> Dpn:
    live = set(live_ids)
    return net.with_transitions(t for t in net.transitions if t.id in live)


def remove_isolated_places(inst: NetInstance) -> NetInstance:
    net = inst.net
    used = set()
    for arcs in list(net.pre.values()) + list(net.post.values()):
        used.update(p for p, _ in arcs)
    keep = tuple(
        p
        for i, p in enumerate(net.places)
        if p in used or inst.initial_marking[i] or inst.final_marking[i]
    )
    if keep == net.places:
        return inst
    return inst.with_net(Dpn(keep, net.transitions, net.variables, net.pre, net.post))


def merge_split_transitions(net: Dpn) -> Dpn:
    """Fold refined transitions back into one transition per origin."""
    groups: dict = {}
    order = []
    for t in net.transitions:
        if t.is_tau:
            continue
        key = t.base_id
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(t)
    transitions, pre, post = [], {}, {}
    for key in order:
        members = groups[key]
        first = members[0]
        sig = (sorted(net.pre.get(first.id, ())), sorted(net.post.get(first.id, ())))
        for t in members[1:]:
            if (sorted(net.pre.get(t.id, ())), sorted(net.post.get(t.id, ()))) != sig:
                raise InconsistentSplitGroup(key)
        if len(members) == 1 and first.origin is None:
            transitions.append(first)
        else:
            guard = simplify(disjoin(*(t.guard for t in members))) if len(members) > 1 else first.guard
            writes = frozenset().union(*(t.writes for t in members))
            transitions.append(Transition(key, first.label, TRUE, extra_writes=writes).with_guard(guard))
        pre[key] = net.pre.get(first.id, ())
        post[key] = net.post.get(first.id, ())
    return net.with_transitions(transitions, pre, post)


# ---------------------------------------------------------------------------
# file format


def _number(x, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise ModelSyntaxError(f"{where}: expected a decimal string, got {x!r}")
    try:
        return Fraction(str(x).strip())
    except (ValueError, ZeroDivisionError):
        raise ModelSyntaxError(f"{where}: bad number {x!r}") from None


def _count(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 0:
        if isinstance(x, str) and x.isdigit():
            return int(x)
        raise ModelSyntaxError(f"{where}: expected a natural number, got {x!r}")
    return x


def _parse_arc(a, i: int):
    if isinstance(a, str):
        body, _, w = a.partition(":")
        src, sep, dst = body.partition("->")
        if not sep:
            raise ModelSyntaxError(f"arcs[{i}]: expected 'src -> dst [: weight]'")
        return src.strip(), dst.strip(), _count(w.strip(), f"arcs[{i}]") if w.strip() else 1
    if isinstance(a, Mapping):
        try:
            return str(a["src"]), str(a["dst"]), _count(a.get("weight", 1), f"arcs[{i}]")
        except KeyError as e:
            raise ModelSyntaxError(f"arcs[{i}]: missing {e}") from None
    raise ModelSyntaxError(f"arcs[{i}]: unexpected {a!r}")


REQUIRED_KEYS = (
    "places",
    "variables",
    "transitions",
    "arcs",
    "initial_marking",
    "initial_valuation",
    "final_marking",
)


def from_dict(doc: Mapping) -> NetInstance:
    if not isinstance(doc, Mapping):
        raise ModelSyntaxError("model document must be a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ModelSyntaxError(f"missing sections: {', '.join(missing)}")
    places = doc["places"]
    if not isinstance(places, list) or not places:
        raise ModelSyntaxError("places: expected a non-empty list")
    places = tuple(str(p) for p in places)
    if len(set(places)) != len(places):
        raise ModelSyntaxError("places: duplicate identifier")
    variables = doc["variables"]
    if not isinstance(variables, list):
        raise ModelSyntaxError("variables: expected a list of names")
    variables = tuple(str(v) for v in variables)
    for v in variables:
        if not v.isidentifier() or v.endswith(("_r", "_w")) or v in ("true", "false"):
            raise ModelSyntaxError(f"variables: bad name {v!r}")
    if len(set(variables)) != len(variables):
        raise ModelSyntaxError("variables: duplicate name")

    transitions = []
    seen = set()
    raw_ts = doc["transitions"]
    if not isinstance(raw_ts, list):
        raise ModelSyntaxError("transitions: expected a list")
    for i, rt in enumerate(raw_ts):
        if isinstance(rt, list) and len(rt) in (2, 3):
            rt = {"id": rt[0], "label": rt[1], "guard": rt[2] if len(rt) == 3 else "true"}
        if not isinstance(rt, Mapping) or "id" not in rt:
            raise ModelSyntaxError(f"transitions[{i}]: expected an object with an id")
        tid = str(rt["id"])
        if tid in seen or tid in places:
            raise ModelSyntaxError(f"transitions[{i}]: identifier {tid!r} reused")
        seen.add(tid)
        try:
            guard = parse_guard(str(rt.get("guard", "true")))
        except GuardSyntaxError as e:
            raise ModelSyntaxError(f"transitions[{i}] ({tid}) guard: {e}") from None
        for v in guard.vars():
            if v.ns == PLAIN:
                raise NamespaceError(f"{tid}: guard uses {v.name!r} without _r/_w suffix")
            if v.name not in variables:
                raise UndeclaredIdentifier(f"{tid}: guard uses undeclared variable {v.name!r}")
        extra = rt.get("writes", [])
        if not isinstance(extra, list) or any(str(v) not in variables for v in extra):
            raise UndeclaredIdentifier(f"{tid}: writes must list declared variables")
        t = Transition(tid, str(rt.get("label", tid)), guard, rt.get("origin"), rt.get("tau_of"),
                       frozenset(map(str, extra)))
        transitions.append(t.with_guard(guard))

    pre: dict = {}
    post: dict = {}
    arcs = doc["arcs"]
    if not isinstance(arcs, list):
        raise ModelSyntaxError("arcs: expected a list")
    for i, a in enumerate(arcs):
        src, dst, w = _parse_arc(a, i)
        if src in places and dst in seen:
            pre.setdefault(dst, {})
            pre[dst][src] = pre[dst].get(src, 0) + w
        elif src in seen and dst in places:
            post.setdefault(src, {})
            post[src][dst] = post[src].get(dst, 0) + w
        else:
            bad = src if src not in places and src not in seen else dst
            if bad in places or bad in seen:
                raise ModelSyntaxError(f"arcs[{i}]: arc must connect a place and a transition")
            raise UndeclaredIdentifier(f"arcs[{i}]: unknown node {bad!r}")
    pre = {t: tuple((p, w) for p, w in d.items() if w) for t, d in pre.items()}
    post = {t: tuple((p, w) for p, w in d.items() if w) for t, d in post.items()}

    def marking(key):
        m = doc[key]
        if not isinstance(m, Mapping):
            raise ModelSyntaxError(f"{key}: expected an object place -> count")
        for p in m:
            if p not in places:
                raise UndeclaredIdentifier(f"{key}: unknown place {p!r}")
        return tuple(_count(m.get(p, 0), f"{key}.{p}") for p in places)

    init_val = doc["initial_valuation"]
    if not isinstance(init_val, Mapping):
        raise ModelSyntaxError("initial_valuation: expected an object")
    for v in init_val:
        if v not in variables:
            raise UndeclaredIdentifier(f"initial_valuation: unknown variable {v!r}")
    for v in variables:
        if v not in init_val:
            raise MissingInitialValue(v)
    valuation = {v: _number(init_val[v], f"initial_valuation.{v}") for v in variables}
    net = Dpn(places, tuple(transitions), variables, pre, post)
    return NetInstance(net, marking("initial_marking"), valuation, marking("final_marking"))


def to_dict(inst: NetInstance) -> dict:
    net = inst.net
    ts = []
    for t in net.transitions:
        d = {"id": t.id, "label": t.label, "guard": str(t.guard)}
        if t.origin:
            d["origin"] = t.origin
        if t.tau_of:
            d["tau_of"] = t.tau_of
        if t.extra_writes:
            d["writes"] = sorted(t.extra_writes)
        ts.append(d)
    arcs = []
    for t in net.transitions:
        for p, w in net.pre.get(t.id, ()):
            arcs.append(f"{p} -> {t.id}" + (f" : {w}" if w != 1 else ""))
        for p, w in net.post.get(t.id, ()):
            arcs.append(f"{t.id} -> {p}" + (f" : {w}" if w != 1 else ""))
    return {
        "places": list(net.places),
        "variables": list(net.variables),
        "transitions": ts,
        "arcs": arcs,
        "initial_marking": inst.marking_dict(inst.initial_marking),
        "initial_valuation": {v: fmt_number(inst.initial_valuation[v]) for v in net.variables},
        "final_marking": inst.marking_dict(inst.final_marking),
    }


def parse(text: str) -> NetInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelSyntaxError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return from_dict(doc)


def serialize(inst: NetInstance) -> str:
    return json.dumps(to_dict(inst), indent=2) + "\n"


def load(path) -> NetInstance:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def dump(inst: NetInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(inst))


def structurally_equal(a: NetInstance, b: NetInstance) -> bool:
    return to_dict(a) == to_dict(b)
