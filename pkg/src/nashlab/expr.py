"""Tiny arithmetic expression language for user-defined coefficients.

Grammar: numbers, the variable ``x``, the constants ``pi`` and ``e``,
binary ``+ - * / ^`` (``^`` is power), unary minus and the functions
``exp``, ``ln``, ``abs``, ``sqrt``, ``tanh``, ``sin``, ``cos``.  Expressions compile to vectorised
numpy callables; anything outside the grammar is rejected at parse time.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

_FUNCS = {
    "exp": np.exp, "ln": np.log, "abs": np.abs, "sqrt": np.sqrt,
    "tanh": np.tanh, "sin": np.sin, "cos": np.cos,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


def _compile(node):
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        value = float(node.value)
        return lambda x: np.full_like(x, value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x: x
        if node.id in _CONSTS:
            value = _CONSTS[node.id]
            return lambda x: np.full_like(x, value)
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda x: -inner(x)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left), _compile(node.right)
        return lambda x: op(left(x), right(x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in _FUNCS or len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"unsupported call {ast.dump(node.func)}")
        fn = _FUNCS[node.func.id]
        arg = _compile(node.args[0])
        return lambda x: fn(arg(x))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)}")


def parse_expression(text: str) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` to a function of a float array ``x``."""
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    body = _compile(tree)

    def fn(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return np.asarray(body(x), dtype=float)

    fn.source = text
    return fn
