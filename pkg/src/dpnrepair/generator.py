"""Seeded synthetic nets for property campaigns and benchmarks.

A net is grown from ``i -> t1 -> o`` by sequence, choice, parallel and loop
steps until it has the requested numbers of places and transitions, then a
few extra arcs are added and random comparisons are placed on transitions.
Candidates without any run reaching the final marking are discarded.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .model import NetInstance, from_dict
from .oracle import reaches_final

CONSTANTS = (0, 1, 3, 18)
OPS = ("<", "<=", "=", "!=", ">=", ">")


class GenerationExhausted(Exception):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    seed: int = 0
    require_trace_to_final: bool = True
    max_rounds: int = 200

    @property
    def places(self) -> int:
        return math.ceil(1.2 * self.n)

    @property
    def transitions(self) -> int:
        return self.n

    @property
    def variables(self) -> int:
        return max(1, math.ceil(0.25 * self.n))

    @property
    def conditions(self) -> int:
        return math.ceil(0.5 * self.n)


def _skeleton(p: GeneratorParams, rng: random.Random):
    places = ["i", "o"]
    # transition -> [pre places], [post places]
    pre = {"t1": ["i"]}
    post = {"t1": ["o"]}
    order = ["t1"]
    extra_p = p.places - 2
    extra_t = p.transitions - 1
    seq = extra_t - rng.randint(0, extra_t // 3)
    seq = max(1, min(seq, extra_p))
    steps = ["seq"] * seq + ["par"] * (extra_p - seq) + ["alt"] * (extra_t - seq)
    rng.shuffle(steps)
    # a sequence step must come first so that inner places exist
    steps.remove("seq")
    steps.insert(0, "seq")
    np_, nt = 0, 1

    def new_place():
        nonlocal np_
        np_ += 1
        name = f"p{np_}"
        places.insert(len(places) - 1, name)
        return name

    def new_transition():
        nonlocal nt
        nt += 1
        name = f"t{nt}"
        order.append(name)
        return name

    for step in steps:
        inner = [q for q in places if q not in ("i", "o")]
        if step == "seq":
            t = rng.choice(order)
            q, u = new_place(), new_transition()
            post[u] = post[t]
            pre[u] = [q]
            post[t] = [q]
        elif step == "par":
            q0 = rng.choice(inner)
            q = new_place()
            for t in order:
                if q0 in pre[t]:
                    pre[t] = pre[t] + [q]
                if q0 in post[t]:
                    post[t] = post[t] + [q]
        elif rng.random() < 0.5 and inner:
            q = rng.choice(inner)
            u = new_transition()
            pre[u], post[u] = [q], [q]
        else:
            t = rng.choice(order)
            u = new_transition()
            pre[u], post[u] = list(pre[t]), list(post[t])
    return places, order, pre, post


def _guards(p: GeneratorParams, rng: random.Random, order: list, variables: list) -> dict:
    per_t: dict = {}
    for _ in range(p.conditions):
        t = rng.choice(order)
        v = rng.choice(variables) + rng.choice(("_r", "_w"))
        per_t.setdefault(t, []).append(f"{v} {rng.choice(OPS)} {rng.choice(CONSTANTS)}")
    guards = {}
    for t, atoms in per_t.items():
        text = atoms[0]
        for a in atoms[1:]:
            text = f"{text} {rng.choice(('&&', '||'))} {a}"
        guards[t] = text
    return guards


def _candidate(p: GeneratorParams, rng: random.Random) -> dict:
    places, order, pre, post = _skeleton(p, rng)
    arcs = set()
    for t in order:
        arcs.update((q, t) for q in pre[t])
        arcs.update((t, q) for q in post[t])
    for _ in range(rng.randint(0, 2)):
        t = rng.choice(order)
        if rng.random() < 0.5:
            arcs.add((rng.choice(places[:-1]), t))
        else:
            arcs.add((t, rng.choice(places[1:])))
    variables = [f"v{k}" for k in range(1, p.variables + 1)]
    guards = _guards(p, rng, order, variables)
    node_rank = {x: k for k, x in enumerate(places + order)}
    return {
        "places": places,
        "variables": variables,
        "transitions": [{"id": t, "label": t, "guard": guards.get(t, "true")} for t in order],
        "arcs": [f"{a} -> {b}" for a, b in sorted(arcs, key=lambda e: (node_rank[e[0]], node_rank[e[1]]))],
        "initial_marking": {"i": 1},
        "initial_valuation": {v: "0" for v in variables},
        "final_marking": {"o": 1},
    }


def generate_document(p: GeneratorParams) -> dict:
    if p.n < 3:
        raise ValueError("n must be at least 3")
    rng = random.Random(p.n * 1_000_003 + p.seed)
    for _ in range(p.max_rounds):
        doc = _candidate(p, rng)
        if not p.require_trace_to_final or reaches_final(from_dict(doc), ceiling=3, state_cap=4000):
            return doc
    raise GenerationExhausted(f"no candidate with a run to the final marking after {p.max_rounds} rounds")


def generate(n: int, seed: int = 0, **kw) -> NetInstance:
    return from_dict(generate_document(GeneratorParams(n, seed, **kw)))
