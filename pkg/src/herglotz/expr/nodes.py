"""Immutable expression trees and their canonical text form."""

from __future__ import annotations

import re
from dataclasses import dataclass

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")
# ``sign`` only appears in derivatives of ``abs``; it parses so printed derivatives round-trip
INTERNAL_FUNCTIONS = ("sign",)

_VARIABLE = re.compile(
    r"^(?:t|z|u|ut|x[1-9]\d*|v[1-9]\d*(?:_[1-9]\d*)?|ux[1-9]\d*|s[1-9]\d*)$"
)


def is_variable_name(name: str) -> bool:
    """Whether ``name`` belongs to the Lagrangian variable alphabet."""
    return bool(_VARIABLE.match(name))


class Expr:
    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True, slots=True)
class BinOp(Expr):
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


class Add(BinOp):
    __slots__ = ()
    symbol = "+"


class Sub(BinOp):
    __slots__ = ()
    symbol = "-"


class Mul(BinOp):
    __slots__ = ()
    symbol = "*"


class Div(BinOp):
    __slots__ = ()
    symbol = "/"


class Pow(BinOp):
    __slots__ = ()
    symbol = "^"


@dataclass(frozen=True, slots=True)
class Call(Expr):
    func: str
    arg: Expr

    def __post_init__(self):
        if self.func not in FUNCTIONS + INTERNAL_FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")

    def children(self):
        return (self.arg,)


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), 5)


def _fmt_const(v: float) -> str:
    text = repr(float(v))
    return f"({text})" if v < 0 or text.startswith("-") else text


def to_source(e: Expr) -> str:
    """Text that parses back to a structurally identical tree."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        # "-(2.5)" keeps a wrapped negation from reading as the negative literal "(-2.5)"
        return f"-({inner})" if _prec(e.arg) < 3 or isinstance(e.arg, Const) else f"-{inner}"
    if isinstance(e, BinOp):
        p = _PREC[type(e)]
        left, right = to_source(e.left), to_source(e.right)
        if isinstance(e, Pow):
            # right-associative; the exponent may itself be a unary minus
            if _prec(e.left) <= p:
                left = f"({left})"
            if _prec(e.right) < 3:
                right = f"({right})"
        else:
            if _prec(e.left) < p:
                left = f"({left})"
            if _prec(e.right) <= p:
                right = f"({right})"
        return f"{left}{e.symbol}{right}" if p >= 2 else f"{left} {e.symbol} {right}"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> set[str]:
    """Free variable names of ``e``."""
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for c in e.children():
        out |= variables(c)
    return out


def depth(e: Expr) -> int:
    kids = e.children()
    return 1 + (max(depth(c) for c in kids) if kids else 0)
