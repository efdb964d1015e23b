"""Arithmetic expressions over ``x, y, r`` for coefficient fields.

Only numbers, the variables, ``pi``/``e``, arithmetic operators and a fixed
set of elementwise functions are accepted; anything else is rejected at
parse time.  ``r`` is the distance from the base point of the ray fan.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = ["Expression", "parse_expression"]

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh,
    "arctan": np.arctan, "min": np.minimum, "max": np.maximum,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_VARS = ("x", "y", "r")
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _check(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, source)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ValidationError(f"only numeric literals are allowed in {source!r}")
    elif isinstance(node, ast.Name):
        if node.id not in _VARS and node.id not in _CONSTS:
            raise ValidationError(f"unknown name {node.id!r} in {source!r}; allowed: x, y, r, pi, e")
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ValidationError(f"operator not allowed in {source!r}")
        _check(node.left, source)
        _check(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNOPS:
            raise ValidationError(f"operator not allowed in {source!r}")
        _check(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
            raise ValidationError(f"function not allowed in {source!r}; allowed: {sorted(_FUNCS)}")
        for arg in node.args:
            _check(arg, source)
    else:
        raise ValidationError(f"unsupported syntax in {source!r}")


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, env))
    return _FUNCS[node.func.id](*(_eval(a, env) for a in node.args))


@dataclass(frozen=True)
class Expression:
    source: str
    tree: ast.Expression

    def uses(self, name: str) -> bool:
        return any(isinstance(n, ast.Name) and n.id == name for n in ast.walk(self.tree))

    def __call__(self, points, base=None) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        m, dim = pts.shape
        origin = np.zeros(dim) if base is None else np.asarray(base, dtype=float).reshape(dim)
        env = {
            "x": pts[:, 0],
            "y": pts[:, 1] if dim > 1 else np.zeros(m),
            "r": np.linalg.norm(pts - origin, axis=1),
        }
        with np.errstate(all="ignore"):
            val = np.broadcast_to(np.asarray(_eval(self.tree.body, env), dtype=float), (m,)).copy()
        if not np.all(np.isfinite(val)):
            raise ValidationError(f"expression {self.source!r} is not finite on the grid")
        return val


def parse_expression(source) -> Expression:
    """Parse a number or an expression string into an :class:`Expression`."""
    if isinstance(source, bool):
        raise ValidationError("expected a number or an expression string")
    if isinstance(source, (int, float)):
        source = repr(float(source))
    if not isinstance(source, str) or not source.strip():
        raise ValidationError("expected a number or an expression string")
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"cannot parse expression {source!r}: {exc.msg}") from None
    _check(tree, source)
    return Expression(source.strip(), tree)
