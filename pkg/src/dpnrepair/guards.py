"""Parser for the textual guard language.

::

    expr    := term { "||" term }
    term    := factor { "&&" factor }
    factor  := "!" factor | "(" expr ")" | atom | "true" | "false"
    atom    := operand ("<" | "<=" | "=" | "!=" | ">=" | ">") operand
    operand := IDENT [ "_r" | "_w" ] | NUMBER

``NUMBER`` is a decimal (``-3``, ``0.25``) or a fraction ``p/q``; values are
read exactly.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .constraints import (
    FALSE,
    PLAIN,
    READ,
    TRUE,
    WRITE,
    Constraint,
    Var,
    atom,
    conjoin,
    disjoin,
    negate,
)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?(?:/\d+)?)|(?P<id>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|!=|==|&&|\|\||[<>=!()]))"
)


class GuardSyntaxError(ValueError):
    def __init__(self, msg: str, text: str, pos: int):
        super().__init__(f"{msg} at column {pos + 1}: {text!r}")
        self.pos = pos


def split_ident(ident: str) -> Var:
    if ident.endswith("_r") and len(ident) > 2:
        return Var(ident[:-2], READ)
    if ident.endswith("_w") and len(ident) > 2:
        return Var(ident[:-2], WRITE)
    return Var(ident, PLAIN)


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise GuardSyntaxError("unexpected character", text, pos + len(text[pos:]) - len(text[pos:].lstrip()))
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg):
        raise GuardSyntaxError(msg, self.text, self.peek()[2])

    def expr(self) -> Constraint:
        parts = [self.term()]
        while self.peek()[1] == "||":
            self.take()
            parts.append(self.term())
        return disjoin(*parts) if len(parts) > 1 else parts[0]

    def term(self) -> Constraint:
        parts = [self.factor()]
        while self.peek()[1] == "&&":
            self.take()
            parts.append(self.factor())
        return conjoin(*parts) if len(parts) > 1 else parts[0]

    def factor(self) -> Constraint:
        kind, val, _ = self.peek()
        if val == "!":
            self.take()
            return negate(self.factor())
        if val == "(":
            self.take()
            e = self.expr()
            if self.peek()[1] != ")":
                self.fail("expected ')'")
            self.take()
            return e
        if kind == "id" and val in ("true", "false"):
            self.take()
            return TRUE if val == "true" else FALSE
        lhs = self.operand()
        kind, op, _ = self.peek()
        if op not in ("<", "<=", "=", "==", "!=", ">=", ">"):
            self.fail("expected comparator")
        self.take()
        rhs = self.operand()
        return atom(lhs, op, rhs)

    def operand(self):
        kind, val, _ = self.peek()
        if kind == "num":
            self.take()
            return Fraction(val)
        if kind == "id" and val not in ("true", "false"):
            self.take()
            return split_ident(val)
        self.fail("expected operand")


def parse_guard(text: str) -> Constraint:
    p = _Parser(text)
    if p.peek()[0] == "end":
        raise GuardSyntaxError("empty guard", text, 0)
    c = p.expr()
    if p.peek()[0] != "end":
        p.fail("trailing input")
    return c
