import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpnrepair.constraints import (
    FALSE,
    READ,
    TRUE,
    WRITE,
    UndefinedVariable,
    Var,
    atom,
    conjoin,
    disjoin,
    eliminate,
    equivalent,
    evaluate,
    implies,
    negate,
    rename,
    satisfiable,
    simplify,
)
from dpnrepair.guards import GuardSyntaxError, parse_guard
from enum_oracle import (
    eval_constraint,
    eval_tree,
    exists_last,
    order_types,
    random_tree,
    tree_text,
    tree_vars,
)

x, y = Var("x"), Var("y")
P = parse_guard


def test_contradictory_bounds_are_unsat():
    assert not satisfiable(P("age_r > 18 && age_r < 10"))


def test_strict_cycle_is_unsat():
    assert P("x < y && y < z && z < x").is_false()
    assert satisfiable(P("x <= y && y <= z && z <= x"))


def test_dense_order_between_constants():
    assert satisfiable(P("x > 0 && x < 1"))
    assert satisfiable(P("x > 0 && x < 1 && y > x && y < 1"))


def test_negation_of_comparison():
    assert equivalent(negate(P("x > y")), P("x <= y"))
    assert equivalent(negate(P("x = 3")), P("x < 3 || x > 3"))


def test_excluded_middle_collapses_to_true():
    assert disjoin(P("a < 3"), P("a >= 3")).is_true()


def test_casino_guard_equivalence():
    a = P("hasPass_r = 0 && (age_r <= 0 || age_r > 18) && age_r > 0")
    b = P("hasPass_r = 0 && age_r > 18")
    assert equivalent(a, b)


def test_elimination_keeps_upper_bound():
    c = eliminate(P("a_w > a_r && a_w < 5"), [Var("a", WRITE)])
    assert equivalent(c, P("a_r < 5"))


def test_elimination_of_disequality_is_true():
    assert eliminate(P("x_w != 3"), [Var("x", WRITE)]).is_true()


def test_elimination_of_equality_chain():
    c = eliminate(P("x = y && y = 3"), [y])
    assert equivalent(c, P("x = 3"))


def test_elimination_with_disequality_and_bounds():
    # only 1 lies in [1, 1]
    assert eliminate(P("y >= 1 && y <= 1 && y != 1"), [y]).is_false()
    # (x, 1] minus {0.5} is never empty when x < 1
    c = eliminate(P("y > x && y <= 1 && y != 1/2"), [y])
    assert equivalent(c, P("x < 1"))


def test_simplify_drops_implied_atom():
    assert str(simplify(P("x > 3 && x > 1"))) == "x > 3"


def test_simplify_in_context():
    g = P("hasPass_r = 0 && (age_r <= 0 || age_r > 18)")
    assert str(simplify(g, P("age_r > 0"))) == "age_r > 18 && hasPass_r = 0"


def test_rename_namespaces():
    c = rename(P("x > 1"), lambda v: Var(v.name, READ))
    assert c == P("x_r > 1")


def test_evaluate_strict_and_lenient():
    c = P("x > 1 || y = 0")
    assert evaluate(c, {x: Fraction(2), y: Fraction(1)})
    with pytest.raises(UndefinedVariable):
        evaluate(P("x > 1"), {})
    assert not evaluate(P("x > 1"), {}, strict=False)
    assert evaluate(c, {y: Fraction(0)}, strict=False)


def test_true_false_constants():
    assert negate(TRUE) is FALSE and negate(FALSE) is TRUE
    assert conjoin(TRUE, P("x < 1")) == P("x < 1")
    assert conjoin(FALSE, P("x < 1")).is_false()


def test_printing_round_trips():
    for text in ("x > 3", "x_r <= 1/3 && y_w != 18", "x = 0 || y > 0.5", "true", "false"):
        c = P(text)
        assert P(str(c)) == c


@pytest.mark.parametrize("bad", ["", "x >", "x > 3 &&", "(x > 1", "x ? 1", "3"])
def test_parse_errors(bad):
    with pytest.raises(GuardSyntaxError):
        P(bad)


def test_gt_is_stored_flipped():
    c = atom(x, ">", 3)
    (conj,) = c.dnf
    (a,) = conj
    assert a.op == "<" and a.rhs == x


# --- property tests against the enumeration oracle

ROWS = {k: order_types(k) for k in range(1, 4)}


def _setup(tree):
    names = sorted(tree_vars(tree))
    cols = {Var(n): i for i, n in enumerate(names)}
    return names, cols, ROWS[len(names)]


@st.composite
def trees(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    k = draw(st.integers(1, 3))
    return random_tree(random.Random(seed), ["x", "y", "z"][:k])


@settings(max_examples=150, deadline=None)
@given(trees())
def test_canonical_form_matches_oracle(tree):
    names, cols, rows = _setup(tree)
    c = P(tree_text(tree))
    truth = eval_tree(tree, rows, cols)
    assert np.array_equal(eval_constraint(c, rows, cols), truth)
    assert satisfiable(c) == truth.any()


@settings(max_examples=150, deadline=None)
@given(trees())
def test_negation_matches_oracle(tree):
    names, cols, rows = _setup(tree)
    c = P(tree_text(tree))
    assert np.array_equal(eval_constraint(negate(c), rows, cols), ~eval_tree(tree, rows, cols))
    assert equivalent(negate(negate(c)), c)


@settings(max_examples=150, deadline=None)
@given(trees())
def test_elimination_matches_oracle(tree):
    names, cols, rows = _setup(tree)
    c = P(tree_text(tree))
    victim = Var(names[-1])
    got = eliminate(c, [victim])
    assert victim not in got.vars()
    assert np.array_equal(eval_constraint(got, rows, cols), exists_last(eval_tree(tree, rows, cols), rows))


@settings(max_examples=100, deadline=None)
@given(trees(), trees())
def test_implication_matches_oracle(t1, t2):
    names = sorted(tree_vars(t1) | tree_vars(t2))
    cols = {Var(n): i for i, n in enumerate(names)}
    rows = ROWS[len(names)]
    a, b = P(tree_text(t1)), P(tree_text(t2))
    va, vb = eval_tree(t1, rows, cols), eval_tree(t2, rows, cols)
    assert implies(a, b) == bool(np.all(~va | vb))
    assert equivalent(a, b) == bool(np.array_equal(va, vb))
