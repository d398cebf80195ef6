"""Evaluation, symbolic differentiation and numpy compilation of expressions."""

from __future__ import annotations

import cmath
import math
from typing import Mapping

import numpy as np

from herglotz.errors import DomainError, UnboundVariable
from herglotz.expr.nodes import (
    Add,
    BinOp,
    Call,
    Const,
    Div,
    Expr,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    variables,
)

ZERO = Const(0.0)
ONE = Const(1.0)


def _int_exponent(w: Expr) -> int | None:
    if isinstance(w, Const) and float(w.value).is_integer() and abs(w.value) <= 64:
        return int(w.value)
    return None


# -- scalar evaluation -------------------------------------------------------

def _c_log(u: complex) -> complex:
    if u == 0:
        raise DomainError("log of zero")
    return cmath.log(u)


def _c_sign(u: complex) -> complex:
    if u == 0:
        raise DomainError("abs is not differentiable at zero")
    return u / abs(u)


_SCALAR_FUNCS = {
    "sin": cmath.sin,
    "cos": cmath.cos,
    "exp": cmath.exp,
    "log": _c_log,
    "sqrt": cmath.sqrt,
    "abs": lambda u: complex(abs(u)),
    "sign": _c_sign,
}


def _c_pow(u: complex, w: complex, k: int | None) -> complex:
    if u == 0 and (w.real < 0 or (w.real == 0 and w.imag != 0)):
        raise DomainError("zero raised to a non-positive power")
    if k is not None:
        return u ** k
    if u == 0:
        return 0j
    return cmath.exp(w * cmath.log(u))


def evaluate(e: Expr, bindings: Mapping[str, complex]) -> complex:
    """Complex value of ``e``; ``log`` and ``sqrt`` use the principal branch."""
    if isinstance(e, Const):
        return complex(e.value)
    if isinstance(e, Var):
        try:
            return complex(bindings[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    if isinstance(e, Call):
        return _SCALAR_FUNCS[e.func](evaluate(e.arg, bindings))
    u = evaluate(e.left, bindings)
    w = evaluate(e.right, bindings)
    if isinstance(e, Add):
        return u + w
    if isinstance(e, Sub):
        return u - w
    if isinstance(e, Mul):
        return u * w
    if isinstance(e, Div):
        if w == 0:
            raise DomainError("division by zero")
        return u / w
    if isinstance(e, Pow):
        k = _int_exponent(e.right)
        if k is None and w.imag == 0 and w.real.is_integer() and abs(w.real) <= 64:
            k = int(w.real)
        return _c_pow(u, w, k)
    raise TypeError(f"not an expression node: {e!r}")


# -- constant-folding constructors -----------------------------------------

def _is(e: Expr, v: float) -> bool:
    return isinstance(e, Const) and e.value == v


def add(u: Expr, w: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(w, Const):
        return Const(u.value + w.value)
    if _is(u, 0.0):
        return w
    if _is(w, 0.0):
        return u
    return Add(u, w)


def sub(u: Expr, w: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(w, Const):
        return Const(u.value - w.value)
    if _is(w, 0.0):
        return u
    if _is(u, 0.0):
        return neg(w)
    return Sub(u, w)


def neg(u: Expr) -> Expr:
    if isinstance(u, Const):
        return Const(-u.value)
    if isinstance(u, Neg):
        return u.arg
    return Neg(u)


def mul(u: Expr, w: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(w, Const):
        return Const(u.value * w.value)
    if _is(u, 0.0) or _is(w, 0.0):
        return ZERO
    if _is(u, 1.0):
        return w
    if _is(w, 1.0):
        return u
    return Mul(u, w)


def div(u: Expr, w: Expr) -> Expr:
    if isinstance(u, Const) and isinstance(w, Const) and w.value != 0:
        return Const(u.value / w.value)
    if _is(u, 0.0):
        return ZERO
    if _is(w, 1.0):
        return u
    return Div(u, w)


def power(u: Expr, w: Expr) -> Expr:
    if _is(w, 0.0):
        return ONE
    if _is(w, 1.0):
        return u
    if isinstance(u, Const) and isinstance(w, Const):
        try:
            val = u.value ** w.value
        except (ZeroDivisionError, OverflowError):
            return Pow(u, w)
        if isinstance(val, float) and math.isfinite(val):
            return Const(val)
    return Pow(u, w)


def call(f: str, u: Expr) -> Expr:
    return Call(f, u)


def fold(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the folding constructors."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return neg(fold(e.arg))
    if isinstance(e, Call):
        return Call(e.func, fold(e.arg))
    ctor = {Add: add, Sub: sub, Mul: mul, Div: div, Pow: power}[type(e)]
    return ctor(fold(e.left), fold(e.right))


# -- differentiation -------------------------------------------------------

def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative with respect to ``var``, constant-folded.

    ``abs`` differentiates to ``sign``, which raises :class:`DomainError`
    when evaluated at zero.
    """
    if var not in variables(e):
        return ZERO
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(differentiate(e.arg, var))
    if isinstance(e, Call):
        u = e.arg
        du = differentiate(u, var)
        if _is(du, 0.0):
            return ZERO
        f = e.func
        if f == "sin":
            outer = call("cos", u)
        elif f == "cos":
            outer = neg(call("sin", u))
        elif f == "exp":
            outer = e
        elif f == "log":
            return div(du, u)
        elif f == "sqrt":
            return div(du, mul(Const(2.0), e))
        elif f == "abs":
            outer = call("sign", u)
        else:  # sign: piecewise constant
            return ZERO
        return mul(outer, du)
    assert isinstance(e, BinOp)
    u, w = e.left, e.right
    du, dw = differentiate(u, var), differentiate(w, var)
    if isinstance(e, Add):
        return add(du, dw)
    if isinstance(e, Sub):
        return sub(du, dw)
    if isinstance(e, Mul):
        return add(mul(du, w), mul(u, dw))
    if isinstance(e, Div):
        return sub(div(du, w), div(mul(u, dw), power(w, Const(2.0))))
    if isinstance(e, Pow):
        if _is(dw, 0.0):
            return mul(mul(w, power(u, sub(w, ONE))), du)
        return mul(e, add(mul(dw, call("log", u)), div(mul(w, du), u)))
    raise TypeError(f"not an expression node: {e!r}")


# -- numpy compilation -----------------------------------------------------

def _np_log(u):
    if np.any(u == 0):
        raise DomainError("log of zero")
    return np.log(u)


def _np_div(u, w):
    if np.any(w == 0):
        raise DomainError("division by zero")
    return u / w


def _np_sign(u):
    a = np.abs(u)
    if np.any(a == 0):
        raise DomainError("abs is not differentiable at zero")
    return u / a


def _np_ipow(u, k):
    if k == 0:
        return np.ones_like(u)
    if k < 0:
        return _np_div(1.0, _np_ipow(u, -k))
    out = u
    for _ in range(k - 1):
        out = out * u
    return out


def _np_pow(u, w):
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any((u == 0) & (w.real <= 0)):
        raise DomainError("zero raised to a non-positive power")
    with np.errstate(all="ignore"):
        return np.where(u == 0, 0j, np.exp(w * np.log(np.where(u == 0, 1.0, u))))


_NP_ENV = {
    "_sin": np.sin, "_cos": np.cos, "_exp": np.exp, "_log": _np_log, "_sqrt": np.sqrt,
    "_abs": lambda u: np.abs(u).astype(complex), "_sign": _np_sign,
    "_div": _np_div, "_ipow": _np_ipow, "_pow": _np_pow,
}


def _emit(e: Expr) -> str:
    if isinstance(e, Const):
        return f"({float(e.value)!r})"
    if isinstance(e, Var):
        return f"env[{e.name!r}]"
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg)})"
    if isinstance(e, Call):
        return f"_{e.func}({_emit(e.arg)})"
    u, w = _emit(e.left), _emit(e.right)
    if isinstance(e, Add):
        return f"({u} + {w})"
    if isinstance(e, Sub):
        return f"({u} - {w})"
    if isinstance(e, Mul):
        return f"({u} * {w})"
    if isinstance(e, Div):
        return f"_div({u}, {w})"
    k = _int_exponent(e.right)
    if k is not None:
        return f"_ipow({u}, {k})"
    return f"_pow({u}, {w})"


class Compiled:
    """Vectorised evaluator: call with a mapping of variable name to array."""

    def __init__(self, e: Expr):
        self.expr = e
        self.names = frozenset(variables(e))
        self._code = compile(f"lambda env: {_emit(e)}", "<expr>", "eval")
        self._fn = eval(self._code, dict(_NP_ENV))

    def __call__(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        missing = self.names.difference(env)
        if missing:
            raise UnboundVariable(sorted(missing)[0])
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        args = {k: np.asarray(env[k], dtype=complex) for k in self.names}
        with np.errstate(all="ignore"):
            out = self._fn(args)
        return np.broadcast_to(np.asarray(out, dtype=complex), shape)
