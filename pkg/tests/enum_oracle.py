"""Order-type enumeration for constraints over a handful of real variables.

Rows are built by inserting variables one at a time into the sorted list of
values seen so far, either onto an existing value or into a fresh gap, so
every order type relative to the constants and the earlier variables occurs
exactly once.  Later columns vary fastest, which makes projections onto a
prefix of the columns contiguous.
"""

import random

import numpy as np

from dpnrepair.constraints import Var

CONSTANTS = (0, 1, 3, 18)
OPS = ("<", "<=", "=", "!=", ">=", ">")


def _choices(points):
    pts = sorted(points)
    out = list(pts)
    out.append(pts[0] - 1)
    out.append(pts[-1] + 1)
    out.extend((a + b) / 2 for a, b in zip(pts, pts[1:]))
    return out


def order_types(k, constants=CONSTANTS):
    rows = [()]
    for _ in range(k):
        nxt = []
        for r in rows:
            for x in _choices(set(constants) | set(r)):
                nxt.append(r + (x,))
        rows = nxt
    return np.array(rows, dtype=float).reshape(len(rows), k)


_NP_OPS = {
    "<": np.less,
    "<=": np.less_equal,
    "=": np.equal,
    "!=": np.not_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


def _col(term, rows, cols):
    if isinstance(term, Var):
        return rows[:, cols[term]]
    return np.full(len(rows), float(term))


def eval_tree(tree, rows, cols):
    kind = tree[0]
    if kind == "atom":
        _, lhs, op, rhs = tree
        return _NP_OPS[op](_col(lhs, rows, cols), _col(rhs, rows, cols))
    if kind == "not":
        return ~eval_tree(tree[1], rows, cols)
    parts = [eval_tree(t, rows, cols) for t in tree[1:]]
    acc = parts[0]
    for p in parts[1:]:
        acc = (acc & p) if kind == "and" else (acc | p)
    return acc


def eval_constraint(c, rows, cols):
    """Evaluate a canonical constraint straight from its atoms."""
    out = np.zeros(len(rows), dtype=bool)
    for conj in c.dnf:
        acc = np.ones(len(rows), dtype=bool)
        for a in conj:
            acc &= _NP_OPS[a.op](_col(a.lhs, rows, cols), _col(a.rhs, rows, cols))
        out |= acc
    return out


def exists_last(values, rows, j=1):
    """Project out the last ``j`` columns: one boolean per prefix, broadcast back."""
    prefix = rows[:, : rows.shape[1] - j]
    if prefix.shape[1] == 0:
        return np.full(len(rows), values.any())
    _, inv = np.unique(prefix, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    hit = np.zeros(inv.max() + 1, dtype=bool)
    np.logical_or.at(hit, inv, values)
    return hit[inv]


def tree_text(tree):
    kind = tree[0]
    if kind == "atom":
        _, lhs, op, rhs = tree
        return f"{lhs} {op} {rhs}"
    if kind == "not":
        return f"!({tree_text(tree[1])})"
    sep = " && " if kind == "and" else " || "
    return "(" + sep.join(tree_text(t) for t in tree[1:]) + ")"


def random_tree(rng: random.Random, names, depth=3, var_var=0.2):
    if depth == 0 or rng.random() < 0.3:
        lhs = Var(rng.choice(names))
        if len(names) > 1 and rng.random() < var_var:
            rhs = Var(rng.choice([n for n in names if n != lhs.name]))
        else:
            rhs = rng.choice(CONSTANTS)
        return ("atom", lhs, rng.choice(OPS), rhs)
    r = rng.random()
    if r < 0.15:
        return ("not", random_tree(rng, names, depth - 1, var_var))
    kind = "and" if r < 0.6 else "or"
    return (kind,) + tuple(random_tree(rng, names, depth - 1, var_var) for _ in range(rng.randint(2, 3)))


def tree_vars(tree):
    if tree[0] == "atom":
        return {t.name for t in (tree[1], tree[3]) if isinstance(t, Var)}
    return set().union(*(tree_vars(t) for t in tree[1:]))
