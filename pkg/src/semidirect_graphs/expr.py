"""Arithmetic expressions in x and y for boundary data.

Grammar: numbers, the names x, y, pi, e, the operators + - * / (binary and
unary +/-), parentheses, and the functions cos, sin, ln, exp. Anything else
is rejected before evaluation.
"""

from __future__ import annotations

import ast
import math
import operator

import numpy as np

from .errors import ConfigError

FUNCTIONS = {"cos": np.cos, "sin": np.sin, "ln": np.log, "exp": np.exp}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "y")
BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class Expression:
    """Compiled expression; call with arrays x, y of the same shape."""

    def __init__(self, source: str):
        if not isinstance(source, str):
            raise ConfigError("expression must be a string")
        self.source = source
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node) -> None:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ConfigError(f"unsupported constant {node.value!r} in {self.source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in VARIABLES and node.id not in CONSTANTS:
                raise ConfigError(f"unknown name {node.id!r} in {self.source!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in BINARY:
                raise ConfigError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in UNARY:
                raise ConfigError(f"operator {type(node.op).__name__} not allowed in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ConfigError(f"unknown function in {self.source!r}")
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        else:
            raise ConfigError(f"unsupported syntax {type(node).__name__} in {self.source!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else CONSTANTS[node.id]
        if isinstance(node, ast.BinOp):
            return BINARY[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return UNARY[type(node.op)](self._eval(node.operand, env))
        return FUNCTIONS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            out = self._eval(self._tree, {"x": x, "y": y})
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, y).shape).copy()

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def compile_expression(source: str) -> Expression:
    return Expression(source)
