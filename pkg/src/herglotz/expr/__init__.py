"""Expression language for Lagrangians: parse, print, evaluate, differentiate."""

from herglotz.expr.calculus import Compiled, differentiate, evaluate, fold
from herglotz.expr.nodes import (
    FUNCTIONS,
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
    depth,
    is_variable_name,
    to_source,
    variables,
)
from herglotz.expr.parser import parse

__all__ = [
    "FUNCTIONS", "Add", "Call", "Compiled", "Const", "Div", "Expr", "Mul", "Neg", "Pow",
    "Sub", "Var", "depth", "differentiate", "evaluate", "fold", "is_variable_name", "parse",
    "to_source", "variables",
]
