"""Recursive-descent parser for Lagrangian expressions.

Precedence, loosest first: ``+ -``, ``* /``, unary ``-``, ``^`` (right
associative).  Positions in error messages are 1-based character offsets.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable

from herglotz.errors import ExprSyntaxError, UnknownIdentifier
from herglotz.expr.nodes import (
    FUNCTIONS,
    INTERNAL_FUNCTIONS,
    Add,
    Call,
    Const,
    Div,
    Expr,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    is_variable_name,
)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()−]))"
)


def _tokenize(src: str):
    pos = 0
    out = []
    while True:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            rest = src[pos:]
            if not rest.strip():
                break
            col = pos + (len(rest) - len(rest.lstrip())) + 1
            raise ExprSyntaxError(f"unexpected character {src[col - 1]!r}", col)
        kind = m.lastgroup
        text = m.group(kind)
        if text == "−":
            text = "-"
        out.append((kind, text, m.start(kind) + 1))
        pos = m.end()
    out.append(("end", "", len(src) + 1))
    return out


class _Parser:
    def __init__(self, src: str, accept: Callable[[str], bool]):
        self.toks = _tokenize(src)
        self.i = 0
        self.accept = accept

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.take()
        if val != text or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {text!r}, found {what}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS or val in INTERNAL_FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if not self.accept(val):
                raise UnknownIdentifier(val, pos)
            return Var(val)
        if kind == "op" and val == "(":
            # "(-2.5)" is a negative literal, which is how negative constants print
            k1, k2, k3 = (self.toks[min(self.i + j, len(self.toks) - 1)] for j in range(3))
            if k1[:2] == ("op", "-") and k2[0] == "num" and k3[:2] == ("op", ")"):
                self.i += 3
                return Const(-float(k2[1]))
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(source: str, alphabet: Iterable[str] | Callable[[str], bool] | None = None) -> Expr:
    """Parse expression text.

    ``alphabet`` optionally narrows the accepted variable names (a set of
    names or a predicate); by default the whole Lagrangian alphabet is allowed.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 1)
    if alphabet is None:
        accept = is_variable_name
    elif callable(alphabet):
        accept = alphabet
    else:
        names = frozenset(alphabet)
        accept = names.__contains__
    return _Parser(source, accept).parse()
