"""Order constraints over real-valued variables.

A :class:`Constraint` is a boolean combination of atoms ``x op y`` and
``x op c`` where ``op`` is one of ``<``, ``<=``, ``=``, ``!=`` (``>`` and
``>=`` are stored by swapping sides).  Constraints are kept in a canonical
disjunctive normal form: a frozenset of conjuncts, each a frozenset of
atoms.  Unsatisfiable conjuncts are pruned and syntactically subsumed
conjuncts are absorbed, so ``FALSE`` is the empty disjunction and ``TRUE``
is the disjunction holding only the empty conjunct.

All decision procedures work per conjunct and rely on the density of the
reals.  Constants are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Iterable, Mapping, NamedTuple, Union

PLAIN = "p"
READ = "r"
WRITE = "w"
NAMESPACES = (PLAIN, READ, WRITE)
_NS_ORDER = {PLAIN: 0, READ: 1, WRITE: 2}
_NS_SUFFIX = {PLAIN: "", READ: "_r", WRITE: "_w"}


class UndefinedVariable(KeyError):
    """Raised by strict evaluation when a valuation misses a variable."""


class Var(NamedTuple):
    name: str
    ns: str = PLAIN

    def __str__(self) -> str:
        return self.name + _NS_SUFFIX[self.ns]


Term = Union[Var, Fraction]


def term_key(t: Term):
    if isinstance(t, Var):
        return (0, t.name, _NS_ORDER[t.ns], 0)
    return (1, "", 0, t)


def fmt_number(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    d = c.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{c.numerator}/{c.denominator}"
    s = f"{float(c):.12f}".rstrip("0").rstrip(".")
    assert Fraction(s) == c
    return s


def _fmt_term(t: Term) -> str:
    return str(t) if isinstance(t, Var) else fmt_number(t)


class Atom(NamedTuple):
    """``lhs op rhs`` with ``op`` in ``<``, ``<=``, ``=``, ``!=``."""

    lhs: Term
    op: str
    rhs: Term

    def key(self):
        a, b = term_key(self.lhs), term_key(self.rhs)
        return (min(a, b), max(a, b), self.op)

    def vars(self) -> Iterable[Var]:
        if isinstance(self.lhs, Var):
            yield self.lhs
        if isinstance(self.rhs, Var):
            yield self.rhs

    def negated(self) -> "Atom":
        if self.op == "<":
            return Atom(self.rhs, "<=", self.lhs)
        if self.op == "<=":
            return Atom(self.rhs, "<", self.lhs)
        return Atom(self.lhs, "!=" if self.op == "=" else "=", self.rhs)

    def holds(self, a: Fraction, b: Fraction) -> bool:
        op = self.op
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == "=":
            return a == b
        return a != b

    def __str__(self) -> str:
        lhs, op, rhs = self.lhs, self.op, self.rhs
        # prefer "x > 3" over "3 < x"
        if not isinstance(lhs, Var) and isinstance(rhs, Var) and op in ("<", "<="):
            return f"{rhs} {'>' if op == '<' else '>='} {_fmt_term(lhs)}"
        return f"{_fmt_term(lhs)} {op} {_fmt_term(rhs)}"


_FLIP = {">": "<", ">=": "<="}


def make_atom(lhs: Term, op: str, rhs: Term) -> Atom | bool:
    """Normalize ``lhs op rhs``; returns a bool when the atom is decided."""
    if isinstance(lhs, (int, str)) and not isinstance(lhs, Var):
        lhs = Fraction(lhs)
    if isinstance(rhs, (int, str)) and not isinstance(rhs, Var):
        rhs = Fraction(rhs)
    if op in _FLIP:
        lhs, rhs, op = rhs, lhs, _FLIP[op]
    elif op == "==":
        op = "="
    if op not in ("<", "<=", "=", "!="):
        raise ValueError(f"unknown comparator {op!r}")
    if not isinstance(lhs, Var) and not isinstance(rhs, Var):
        return Atom(lhs, op, rhs).holds(lhs, rhs)
    if lhs == rhs:
        return op in ("<=", "=")
    if op in ("=", "!=") and term_key(rhs) < term_key(lhs):
        lhs, rhs = rhs, lhs
    return Atom(lhs, op, rhs)


Conjunct = frozenset  # of Atom


# ---------------------------------------------------------------------------
# conjunct level procedures


@lru_cache(maxsize=None)
def conjunct_sat(conj: Conjunct) -> bool:
    """Decide a conjunction of atoms over dense reals.

    Builds the order graph over terms (constants included, chained by their
    numeric order) and closes it.  Unsatisfiable iff a strict cycle exists or
    a ``!=`` relates two terms forced equal.
    """
    if not conj:
        return True
    if all(isinstance(a.rhs, Fraction) or isinstance(a.lhs, Fraction) for a in conj):
        return _bounds_sat(conj)
    terms: dict = {}
    for a in conj:
        for t in (a.lhs, a.rhs):
            if t not in terms:
                terms[t] = len(terms)
    consts = sorted(t for t in terms if not isinstance(t, Var))
    n = len(terms)
    # rel[i][j]: None unknown, 0 for i <= j, 1 for i < j
    rel = [[None] * n for _ in range(n)]

    def add(i, j, s):
        cur = rel[i][j]
        if cur is None or s > cur:
            rel[i][j] = s

    for c1, c2 in zip(consts, consts[1:]):
        add(terms[c1], terms[c2], 1)
    nes = []
    for a in conj:
        i, j = terms[a.lhs], terms[a.rhs]
        if a.op == "<":
            add(i, j, 1)
        elif a.op == "<=":
            add(i, j, 0)
        elif a.op == "=":
            add(i, j, 0)
            add(j, i, 0)
        else:
            nes.append((i, j))
    for k in range(n):
        rk = rel[k]
        for i in range(n):
            ik = rel[i][k]
            if ik is None:
                continue
            ri = rel[i]
            for j in range(n):
                kj = rk[j]
                if kj is None:
                    continue
                s = ik if ik > kj else kj
                cur = ri[j]
                if cur is None or s > cur:
                    ri[j] = s
    for i in range(n):
        if rel[i][i] == 1:
            return False
    for i, j in nes:
        if rel[i][j] is not None and rel[j][i] is not None:
            return False
    return True


def _bounds_sat(conj: Conjunct) -> bool:
    # fast path: every atom compares a variable with a constant
    lo: dict = {}
    hi: dict = {}
    eq: dict = {}
    ne: dict = {}
    for a in conj:
        if isinstance(a.lhs, Var):
            v, c, op, var_left = a.lhs, a.rhs, a.op, True
        else:
            v, c, op, var_left = a.rhs, a.lhs, a.op, False
        if op == "=":
            if v in eq and eq[v] != c:
                return False
            eq[v] = c
        elif op == "!=":
            ne.setdefault(v, set()).add(c)
        else:
            strict = op == "<"
            if var_left:  # v < c  -> upper bound
                cur = hi.get(v)
                if cur is None or c < cur[0] or (c == cur[0] and strict):
                    hi[v] = (c, strict)
            else:
                cur = lo.get(v)
                if cur is None or c > cur[0] or (c == cur[0] and strict):
                    lo[v] = (c, strict)
    for v in set(lo) | set(hi) | set(eq) | set(ne):
        l, h = lo.get(v), hi.get(v)
        if v in eq:
            x = eq[v]
            if l and (x < l[0] or (x == l[0] and l[1])):
                return False
            if h and (x > h[0] or (x == h[0] and h[1])):
                return False
            if x in ne.get(v, ()):
                return False
            continue
        if l and h:
            if l[0] > h[0]:
                return False
            if l[0] == h[0]:
                if l[1] or h[1] or l[0] in ne.get(v, ()):
                    return False
    return True


def _normalize_conjunct(conj: Iterable[Atom]) -> Conjunct | None:
    """Tighten variable/constant bounds; ``None`` when unsatisfiable."""
    conj = frozenset(conj)
    if not conjunct_sat(conj):
        return None
    return _tighten(conj)


@lru_cache(maxsize=None)
def _tighten(conj: Conjunct) -> Conjunct:
    other = []
    lo: dict = {}
    hi: dict = {}
    eq: dict = {}
    ne: dict = {}
    for a in conj:
        lv, rv = isinstance(a.lhs, Var), isinstance(a.rhs, Var)
        if lv and rv:
            other.append(a)
            continue
        v, c = (a.lhs, a.rhs) if lv else (a.rhs, a.lhs)
        if a.op == "=":
            eq[v] = c
        elif a.op == "!=":
            ne.setdefault(v, set()).add(c)
        else:
            strict = a.op == "<"
            if lv:
                cur = hi.get(v)
                if cur is None or c < cur[0] or (c == cur[0] and strict):
                    hi[v] = (c, strict)
            else:
                cur = lo.get(v)
                if cur is None or c > cur[0] or (c == cur[0] and strict):
                    lo[v] = (c, strict)
    out = list(other)
    for v in set(lo) | set(hi) | set(eq) | set(ne):
        if v in eq:
            out.append(Atom(v, "=", eq[v]))
            continue
        l, h = lo.get(v), hi.get(v)
        if l and h and l[0] == h[0]:
            out.append(Atom(v, "=", l[0]))
            continue
        if l:
            out.append(Atom(l[0], "<" if l[1] else "<=", v))
        if h:
            out.append(Atom(v, "<" if h[1] else "<=", h[0]))
        for c in ne.get(v, ()):
            if l and (c < l[0] or (c == l[0] and l[1])):
                continue
            if h and (c > h[0] or (c == h[0] and h[1])):
                continue
            if l and not l[1] and c == l[0]:
                out.remove(Atom(l[0], "<=", v))
                out.append(Atom(l[0], "<", v))
                l = (l[0], True)
                continue
            if h and not h[1] and c == h[0]:
                out.remove(Atom(v, "<=", h[0]))
                out.append(Atom(v, "<", h[0]))
                h = (h[0], True)
                continue
            out.append(Atom(v, "!=", c))
    return frozenset(out)


def _absorb(conjs: Iterable[Conjunct]) -> frozenset:
    uniq = sorted(set(conjs), key=len)
    kept: list = []
    for c in uniq:
        if not any(k <= c for k in kept):
            kept.append(c)
    return frozenset(kept)


# ---------------------------------------------------------------------------
# Constraint


class Constraint:
    """Immutable constraint in canonical DNF."""

    __slots__ = ("dnf", "_neg", "_hash", "_vars")

    def __init__(self, dnf: frozenset):
        self.dnf = dnf
        self._neg = None
        self._hash = hash(dnf)
        self._vars = None

    @classmethod
    def from_conjuncts(cls, conjs: Iterable[Iterable[Atom]]) -> "Constraint":
        out = []
        for c in conjs:
            n = _normalize_conjunct(c)
            if n is not None:
                out.append(n)
        return cls(_absorb(out))

    def __eq__(self, other) -> bool:
        return isinstance(other, Constraint) and self.dnf == other.dnf

    def __hash__(self) -> int:
        return self._hash

    def is_true(self) -> bool:
        return frozenset() in self.dnf

    def is_false(self) -> bool:
        return not self.dnf

    def vars(self) -> frozenset:
        if self._vars is None:
            self._vars = frozenset(v for c in self.dnf for a in c for v in a.vars())
        return self._vars

    def constants(self) -> frozenset:
        return frozenset(
            t for c in self.dnf for a in c for t in (a.lhs, a.rhs) if not isinstance(t, Var)
        )

    def sorted_conjuncts(self) -> list:
        conjs = [sorted(c, key=Atom.key) for c in self.dnf]
        conjs.sort(key=lambda c: [a.key() for a in c])
        return conjs

    def key(self) -> str:
        return str(self)

    def __str__(self) -> str:
        if self.is_false():
            return "false"
        if self.is_true():
            return "true"
        conjs = self.sorted_conjuncts()
        parts = [" && ".join(str(a) for a in c) for c in conjs]
        if len(parts) == 1:
            return parts[0]
        return " || ".join(f"({p})" if len(c) > 1 else p for p, c in zip(parts, conjs))

    def __repr__(self) -> str:
        return f"Constraint({str(self)!r})"

    def __and__(self, other: "Constraint") -> "Constraint":
        return conjoin(self, other)

    def __or__(self, other: "Constraint") -> "Constraint":
        return disjoin(self, other)

    def __invert__(self) -> "Constraint":
        return negate(self)


TRUE = Constraint(frozenset([frozenset()]))
FALSE = Constraint(frozenset())
TRUE._neg = FALSE
FALSE._neg = TRUE


def atom(lhs, op: str, rhs) -> Constraint:
    """Build a constraint from a single comparison (``>``, ``>=`` allowed)."""
    if op == "!=":
        a = make_atom(lhs, "!=", rhs)
    else:
        a = make_atom(lhs, op, rhs)
    if a is True:
        return TRUE
    if a is False:
        return FALSE
    return Constraint.from_conjuncts([[a]])


def conjoin(*cs: Constraint) -> Constraint:
    acc = TRUE
    for c in cs:
        if c.is_false() or acc.is_false():
            return FALSE
        if c.is_true():
            continue
        if acc.is_true():
            acc = c
            continue
        acc = Constraint.from_conjuncts(a | b for a in acc.dnf for b in c.dnf)
    return acc


def disjoin(*cs: Constraint) -> Constraint:
    conjs = [k for c in cs for k in c.dnf]
    if frozenset() in conjs:
        return TRUE
    res = Constraint(_absorb(conjs))
    if len(cs) > 1 and negate(res).is_false():
        return TRUE
    return res


def negate(c: Constraint) -> Constraint:
    if c._neg is not None:
        return c._neg
    acc = [frozenset()]
    for conj in sorted(c.dnf, key=len):
        nxt = []
        for partial in acc:
            for a in conj:
                cand = _normalize_conjunct(partial | {a.negated()})
                if cand is not None:
                    nxt.append(cand)
        acc = list(_absorb(nxt))
        if not acc:
            break
    res = Constraint(_absorb(acc))
    res._neg = c
    c._neg = res
    return res


def implies(a: Constraint, b: Constraint) -> bool:
    return not satisfiable(conjoin(a, negate(b)))


def satisfiable(c: Constraint) -> bool:
    # unsatisfiable conjuncts never survive canonicalization
    return not c.is_false()


_EQUIV_CACHE: dict = {}


def equivalent(a: Constraint, b: Constraint) -> bool:
    if a == b:
        return True
    key = (a, b) if a._hash <= b._hash else (b, a)
    hit = _EQUIV_CACHE.get(key)
    if hit is None:
        hit = implies(a, b) and implies(b, a)
        if len(_EQUIV_CACHE) > 200_000:
            _EQUIV_CACHE.clear()
        _EQUIV_CACHE[key] = hit
    return hit


def evaluate(c: Constraint, valuation: Mapping[Var, Fraction], strict: bool = True) -> bool:
    """Truth of ``c`` under ``valuation``.

    With ``strict=False`` an atom mentioning an unassigned variable is
    simply false, as in the textbook satisfaction relation.
    """

    def val(t):
        if isinstance(t, Var):
            if t in valuation:
                return valuation[t]
            if strict:
                raise UndefinedVariable(str(t))
            return None
        return t

    for conj in c.dnf:
        ok = True
        for a in conj:
            x, y = val(a.lhs), val(a.rhs)
            if x is None or y is None or not a.holds(Fraction(x), Fraction(y)):
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# renaming and quantifier elimination


def rename(c: Constraint, scheme: Callable[[Var], Var] | Mapping[Var, Var]) -> Constraint:
    if isinstance(scheme, Mapping):
        mapping = scheme
        scheme = lambda v: mapping.get(v, v)  # noqa: E731
    conjs = []
    for conj in c.dnf:
        out = []
        for a in conj:
            lhs = scheme(a.lhs) if isinstance(a.lhs, Var) else a.lhs
            rhs = scheme(a.rhs) if isinstance(a.rhs, Var) else a.rhs
            na = make_atom(lhs, a.op, rhs)
            if na is False:
                break
            if na is not True:
                out.append(na)
        else:
            conjs.append(out)
    return Constraint.from_conjuncts(conjs)


def to_namespace(ns: str) -> Callable[[Var], Var]:
    return lambda v: Var(v.name, ns)


def _substitute(conj: Iterable[Atom], x: Var, t: Term) -> list | None:
    out = []
    for a in conj:
        lhs = t if a.lhs == x else a.lhs
        rhs = t if a.rhs == x else a.rhs
        na = make_atom(lhs, a.op, rhs)
        if na is False:
            return None
        if na is not True:
            out.append(na)
    return out


def _elim_var(conj: frozenset, x: Var) -> list:
    """Project ``x`` out of one conjunct; returns a list of conjuncts."""
    with_x = [a for a in conj if a.lhs == x or a.rhs == x]
    if not with_x:
        return [conj]
    rest = [a for a in conj if not (a.lhs == x or a.rhs == x)]
    for a in with_x:
        if a.op == "=":
            other = a.rhs if a.lhs == x else a.lhs
            sub = _substitute(conj, x, other)
            return [] if sub is None else [frozenset(sub)]
    lowers, uppers, nes = [], [], []
    for a in with_x:
        if a.op == "!=":
            nes.append(a)
        elif a.rhs == x:
            lowers.append((a.lhs, a.op == "<", a))
        else:
            uppers.append((a.rhs, a.op == "<", a))
    if nes:
        for t, strict, a in lowers + uppers:
            if not strict:
                base = conj - {a}
                tight = make_atom(a.lhs, "<", a.rhs)
                out = []
                if tight is not False:
                    out += _elim_var(base | {tight}, x)
                sub = _substitute(base, x, t)
                if sub is not None:
                    out.append(frozenset(sub))
                return out
    out = list(rest)
    for (l, ls, _), (u, us, _) in product(lowers, uppers):
        na = make_atom(l, "<" if ls or us else "<=", u)
        if na is False:
            return []
        if na is not True:
            out.append(na)
    return [frozenset(out)]


def eliminate(c: Constraint, victims: Iterable[Var]) -> Constraint:
    """Existentially quantify ``victims`` away (dense real order)."""
    victims = sorted(set(victims) & c.vars(), key=term_key)
    if not victims:
        return c
    conjs = list(c.dnf)
    for x in victims:
        nxt = []
        for conj in conjs:
            for r in _elim_var(conj, x):
                n = _normalize_conjunct(r)
                if n is not None:
                    nxt.append(n)
        conjs = list(_absorb(nxt))
    return Constraint(_absorb(conjs))


# ---------------------------------------------------------------------------
# simplification


def simplify(c: Constraint, context: Constraint = TRUE) -> Constraint:
    """Shrink ``c`` while keeping it equivalent to ``c`` wherever ``context`` holds.

    Conjuncts that cannot hold under the context or that entail another
    conjunct are dropped, then atoms are removed greedily when doing so does
    not change the constraint inside the context.
    """
    target = conjoin(c, context)
    conjs = [k for k in c.sorted_conjuncts() if satisfiable(conjoin(Constraint.from_conjuncts([k]), context))]
    # drop conjuncts entailed (within context) by the remaining ones
    i = 0
    while i < len(conjs):
        others = Constraint.from_conjuncts(conjs[:i] + conjs[i + 1:])
        if implies(conjoin(Constraint.from_conjuncts([conjs[i]]), context), others):
            del conjs[i]
        else:
            i += 1
    for i in range(len(conjs)):
        j = 0
        while j < len(conjs[i]):
            trial = conjs[i][:j] + conjs[i][j + 1:]
            cand = Constraint.from_conjuncts(conjs[:i] + [trial] + conjs[i + 1:])
            if equivalent(conjoin(cand, context), target):
                conjs[i] = trial
            else:
                j += 1
    return Constraint.from_conjuncts(conjs)
