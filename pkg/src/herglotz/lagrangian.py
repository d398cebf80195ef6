"""Lagrangians with their partial derivatives, from text or from Python callables."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from herglotz.errors import DomainError, EvaluationError, ProblemError
from herglotz.expr import Compiled, Const, Expr, Var, differentiate, fold, parse, to_source
from herglotz.expr.nodes import BinOp, Call, Neg


class Variant(enum.Enum):
    SCALAR = "scalar"
    VECTOR = "vector"
    HIGHER_ORDER = "higher_order"
    FIELD = "field"


def first_order_alphabet(n: int) -> list[str]:
    return ["t", *(f"x{i}" for i in range(1, n + 1)), *(f"v{i}" for i in range(1, n + 1)), "z"]


def higher_order_alphabet(order: int) -> list[str]:
    return ["t", "x1", *(f"v1_{k}" for k in range(1, order + 1)), "z"]


def field_alphabet(space_dims: int) -> list[str]:
    return ["t", *(f"s{i}" for i in range(1, space_dims + 1)), "u", "ut",
            *(f"ux{i}" for i in range(1, space_dims + 1)), "z"]


def _rename(e: Expr, names: Mapping[str, str]) -> Expr:
    if isinstance(e, Var):
        return Var(names.get(e.name, e.name))
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(_rename(e.arg, names))
    if isinstance(e, Call):
        return Call(e.func, _rename(e.arg, names))
    assert isinstance(e, BinOp)
    return type(e)(_rename(e.left, names), _rename(e.right, names))


class _Native:
    """Wraps ``func(**arrays)`` with central-difference partials when none are supplied."""

    def __init__(self, func: Callable, name: str | None = None, step: float = 1e-6):
        self.func = func
        self.name = name
        self.step = step

    def __call__(self, env):
        if self.name is None:
            return np.asarray(self.func(**env), dtype=complex)
        u = np.asarray(env[self.name], dtype=complex)
        d = self.step * np.maximum(1.0, np.abs(u))
        hi = dict(env)
        lo = dict(env)
        hi[self.name] = u + d
        lo[self.name] = u - d
        return (np.asarray(self.func(**hi), dtype=complex)
                - np.asarray(self.func(**lo), dtype=complex)) / (2 * d)


@dataclass
class LagrangianSpec:
    """A Lagrangian over a fixed argument list plus its partial derivatives.

    Build one with :meth:`parse` (symbolic partials) or :meth:`native`
    (finite-difference partials unless explicit ones are given).
    """

    arguments: tuple[str, ...]
    source: str | None = None
    ast: Expr | None = None
    partial_asts: dict[str, Expr] = field(default_factory=dict)
    _value: Callable = field(default=None, repr=False)
    _partials: dict[str, Callable] = field(default_factory=dict, repr=False)

    @classmethod
    def parse(cls, text: str, arguments: Sequence[str],
              aliases: Mapping[str, str] | None = None) -> "LagrangianSpec":
        aliases = dict(aliases or {})
        allowed = set(arguments) | set(aliases)
        ast = parse(text, allowed)
        if aliases:
            ast = _rename(ast, aliases)
        ast = fold(ast)
        partial_asts = {name: differentiate(ast, name) for name in arguments}
        spec = cls(tuple(arguments), text, ast, partial_asts)
        spec._value = Compiled(ast)
        spec._partials = {k: Compiled(v) for k, v in partial_asts.items()}
        return spec

    @classmethod
    def first_order(cls, text: str, n: int = 1) -> "LagrangianSpec":
        return cls.parse(text, first_order_alphabet(n))

    @classmethod
    def higher_order(cls, text: str, order: int) -> "LagrangianSpec":
        # plain v1 means the first scale derivative
        return cls.parse(text, higher_order_alphabet(order), aliases={"v1": "v1_1"})

    @classmethod
    def field(cls, text: str, space_dims: int) -> "LagrangianSpec":
        return cls.parse(text, field_alphabet(space_dims))

    @classmethod
    def native(cls, func: Callable, arguments: Sequence[str],
               partials: Mapping[str, Callable] | None = None) -> "LagrangianSpec":
        """Register a vectorised Python callable ``func(**args)``."""
        spec = cls(tuple(arguments))
        spec._value = _Native(func)
        partials = dict(partials or {})
        spec._partials = {name: (_Native(partials[name]) if name in partials else _Native(func, name))
                          for name in arguments}
        return spec

    @property
    def text(self) -> str:
        if self.ast is not None:
            return to_source(self.ast)
        return "<native>"

    def is_zero(self, name: str) -> bool:
        """True when the partial with respect to ``name`` folds to the constant 0."""
        ast = self.partial_asts.get(name)
        return isinstance(ast, Const) and ast.value == 0.0

    def is_symbolic(self) -> bool:
        return self.ast is not None

    def _run(self, fn, env, what):
        try:
            out = fn(env)
        except DomainError as exc:
            raise EvaluationError(f"{what}: {exc}") from exc
        out = np.asarray(out, dtype=complex)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"{what} is not finite along the trajectory")
        return out

    def value(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        return self._run(self._value, env, "Lagrangian")

    def partial(self, name: str, env: Mapping[str, np.ndarray]) -> np.ndarray:
        if name not in self._partials:
            raise ProblemError(f"{name!r} is not an argument of this Lagrangian")
        if self.is_zero(name):
            shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
            return np.zeros(shape, dtype=complex)
        return self._run(self._partials[name], env, f"dL/d{name}")
