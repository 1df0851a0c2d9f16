"""Explicit-state reference checks over a finite sample of data values.

Values are drawn from a region domain: every constant appearing in a guard or
an initial valuation, the midpoint between each pair of neighbouring
constants, and one point below and above the extremes.  Guard evaluation
and firing are implemented here from scratch so that results can be compared
against the symbolic engine.
"""

from __future__ import annotations

import itertools
import operator
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .constraints import Var
from .model import NetInstance

_OPS = {"<": operator.lt, "<=": operator.le, "=": operator.eq, "!=": operator.ne}


class StateCapExceeded(Exception):
    pass


def net_constants(*insts: NetInstance) -> set:
    out = set()
    for inst in insts:
        out.update(Fraction(v) for v in inst.initial_valuation.values())
        for t in inst.net.transitions:
            for conj in t.guard.dnf:
                for a in conj:
                    for side in (a.lhs, a.rhs):
                        if not isinstance(side, Var):
                            out.add(Fraction(side))
    return out


def region_domain(constants) -> list:
    cs = sorted(set(Fraction(c) for c in constants)) or [Fraction(0)]
    dom = set(cs)
    dom.update((a + b) / 2 for a, b in zip(cs, cs[1:]))
    dom.add(cs[0] - 1)
    dom.add(cs[-1] + 1)
    return sorted(dom)


def _value(term, env):
    if isinstance(term, Var):
        return env[(term.name, term.ns)]
    return Fraction(term)


def guard_holds(guard, env: dict) -> bool:
    """``env`` maps (name, namespace) pairs to values."""
    return any(
        all(_OPS[a.op](_value(a.lhs, env), _value(a.rhs, env)) for a in conj)
        for conj in guard.dnf
    )


class _Explicit:
    def __init__(self, inst: NetInstance, domain: list):
        net = inst.net
        self.inst = inst
        self.places = net.places
        self.vars = net.variables
        self.domain = domain
        self.trans = []
        for t in net.transitions:
            pre = {p: w for p, w in net.pre.get(t.id, ())}
            post = {p: w for p, w in net.post.get(t.id, ())}
            writes = sorted(t.writes)
            self.trans.append((t, pre, post, writes))

    def initial(self):
        m = tuple(sorted((p, c) for p, c in zip(self.places, self.inst.initial_marking) if c))
        val = tuple(sorted((v, Fraction(self.inst.initial_valuation[v])) for v in self.vars))
        return (m, val)

    def final(self):
        return dict((p, c) for p, c in zip(self.places, self.inst.final_marking) if c)

    def moves(self, state):
        m, val = state
        marking = dict(m)
        values = dict(val)
        for t, pre, post, writes in self.trans:
            if any(marking.get(p, 0) < w for p, w in pre.items()):
                continue
            nm = dict(marking)
            for p, w in pre.items():
                nm[p] -= w
            for p, w in post.items():
                nm[p] = nm.get(p, 0) + w
            nmk = tuple(sorted((p, c) for p, c in nm.items() if c))
            env = {}
            for v in self.vars:
                env[(v, "r")] = values[v]
                env[(v, "w")] = values[v]
            for combo in itertools.product(self.domain, repeat=len(writes)):
                for v, x in zip(writes, combo):
                    env[(v, "w")] = x
                if guard_holds(t.guard, env):
                    nv = dict(values)
                    nv.update(zip(writes, combo))
                    yield t, dict(zip(writes, combo)), (nmk, tuple(sorted(nv.items())))


@dataclass
class BruteVerdict:
    sound: bool
    c1: bool
    c2: bool
    c3: bool
    unbounded: bool
    states: int
    dead_transitions: list = field(default_factory=list)


def brute_soundness(inst: NetInstance, *, domain=None, ceiling: int = 8, state_cap: int = 200_000) -> BruteVerdict:
    """Soundness by exhaustive exploration over the region domain.

    A marking with more than ``ceiling`` tokens in one place is taken as
    evidence of unboundedness.
    """
    ex = _Explicit(inst, domain if domain is not None else region_domain(net_constants(inst)))
    init = ex.initial()
    seen = {init}
    pred: dict = {init: set()}
    queue = deque([init])
    fired = set()
    unbounded = False
    while queue:
        s = queue.popleft()
        for t, _, nxt in ex.moves(s):
            fired.add(t.base_id)
            if any(c > ceiling for _, c in nxt[0]):
                unbounded = True
                continue
            pred.setdefault(nxt, set()).add(s)
            if nxt not in seen:
                if len(seen) >= state_cap:
                    raise StateCapExceeded(f"more than {state_cap} states")
                seen.add(nxt)
                queue.append(nxt)
    final = ex.final()
    good = {s for s in seen if dict(s[0]) == final}
    queue = deque(good)
    while queue:
        s = queue.popleft()
        for p in pred.get(s, ()):
            if p not in good:
                good.add(p)
                queue.append(p)
    c1 = not unbounded and good == seen
    c2 = True
    for s in seen:
        m = dict(s[0])
        if m != final and all(m.get(p, 0) >= c for p, c in final.items()):
            c2 = False
            break
    dead = sorted({t.base_id for t in inst.net.transitions} - fired)
    c3 = not dead
    return BruteVerdict(c1 and c2 and c3 and not unbounded, c1, c2, c3, unbounded, len(seen), dead)


def rg_subgraph(repaired: NetInstance, original: NetInstance, *, domain=None, state_cap: int = 200_000) -> bool:
    """Check that every firing of ``repaired`` is also a firing of ``original``.

    Transitions are matched through their origin id; markings are compared
    by place name.
    """
    if domain is None:
        domain = region_domain(net_constants(repaired, original))
    ex = _Explicit(repaired, domain)
    orig = {t.id: t for t in original.net.transitions}
    opre = {tid: dict(original.net.pre.get(tid, ())) for tid in orig}
    opost = {tid: dict(original.net.post.get(tid, ())) for tid in orig}
    init = ex.initial()
    if init != _Explicit(original, domain).initial():
        return False
    seen = {init}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        m, val = dict(s[0]), dict(s[1])
        for t, writes, nxt in ex.moves(s):
            ot = orig.get(t.base_id)
            if ot is None:
                return False
            if any(m.get(p, 0) < w for p, w in opre[ot.id].items()):
                return False
            nm = dict(m)
            for p, w in opre[ot.id].items():
                nm[p] -= w
            for p, w in opost[ot.id].items():
                nm[p] = nm.get(p, 0) + w
            if {p: c for p, c in nm.items() if c} != dict(nxt[0]):
                return False
            env = {}
            for v, x in val.items():
                env[(v, "r")] = x
                env[(v, "w")] = writes.get(v, x)
            if not guard_holds(ot.guard, env):
                return False
            if nxt not in seen:
                if len(seen) >= state_cap:
                    raise StateCapExceeded(f"more than {state_cap} states")
                seen.add(nxt)
                queue.append(nxt)
    return True


def reaches_final(inst: NetInstance, *, domain=None, ceiling: int = 8, state_cap: int = 20_000) -> bool:
    """Whether some concrete run over the region domain ends in the final marking."""
    ex = _Explicit(inst, domain if domain is not None else region_domain(net_constants(inst)))
    final = ex.final()
    init = ex.initial()
    seen = {init}
    queue = deque([init])
    while queue:
        s = queue.popleft()
        if dict(s[0]) == final:
            return True
        for _, _, nxt in ex.moves(s):
            if nxt in seen or any(c > ceiling for _, c in nxt[0]):
                continue
            if len(seen) >= state_cap:
                return False
            seen.add(nxt)
            queue.append(nxt)
    return False
