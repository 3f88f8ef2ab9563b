"""
Closed-form coefficient expressions.

Expressions are ordinary arithmetic over the variables ``x`` and ``t`` with a
fixed whitelist of functions.  They are parsed once with :mod:`ast`, checked
against the whitelist, and turned into a tree of numpy closures, so evaluation
is vectorized and never goes through ``eval``.

Supported syntax::

    numbers, x, t, pi, T (the period, when bound)
    + - * / ** %, unary -
    sin cos exp tanh abs sqrt min max piecewise
    comparisons < <= > >= (chained allowed), and / or / not

``piecewise(c1, v1, c2, v2, ..., default)`` picks the first true condition.
"""
from __future__ import annotations

import ast
import operator
from functools import reduce

import numpy as np

from .errors import ParseError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.Mod: np.mod,
}

_CMPOPS = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
}


def _nary(fn):
    def call(*args):
        if len(args) < 2:
            raise ParseError("min/max need at least two arguments")
        return reduce(fn, args)

    return call


def _piecewise(*args):
    if len(args) < 3 or len(args) % 2 == 0:
        raise ParseError("piecewise expects (cond, value, ..., default)")
    conds = args[0:-1:2]
    values = args[1:-1:2]
    default = args[-1]
    shape = np.broadcast(*conds, *values, default).shape
    conds = [np.broadcast_to(c, shape) for c in conds]
    values = [np.broadcast_to(v, shape) for v in values]
    return np.select(conds, values, np.broadcast_to(default, shape))


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "min": _nary(np.minimum),
    "max": _nary(np.maximum),
    "piecewise": _piecewise,
}

CONSTANTS = {"pi": np.pi}


def _compile(node, names):
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"unsupported literal {node.value!r}")
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        name = node.id
        if name in CONSTANTS:
            value = CONSTANTS[name]
            return lambda env: value
        if name not in names:
            raise ParseError(f"unknown name {name!r}")
        return lambda env: env[name]
    if isinstance(node, ast.BinOp):
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise ParseError(f"unsupported operator {type(node.op).__name__}")
        left = _compile(node.left, names)
        right = _compile(node.right, names)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp):
        operand = _compile(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -operand(env)
        if isinstance(node.op, ast.UAdd):
            return operand
        if isinstance(node.op, ast.Not):
            return lambda env: np.logical_not(operand(env))
        raise ParseError(f"unsupported unary operator {type(node.op).__name__}")
    if isinstance(node, ast.Compare):
        parts = [_compile(node.left, names)] + [_compile(c, names) for c in node.comparators]
        ops = []
        for op in node.ops:
            fn = _CMPOPS.get(type(op))
            if fn is None:
                raise ParseError(f"unsupported comparison {type(op).__name__}")
            ops.append(fn)

        def compare(env):
            values = [p(env) for p in parts]
            out = ops[0](values[0], values[1])
            for k in range(1, len(ops)):
                out = np.logical_and(out, ops[k](values[k], values[k + 1]))
            return out

        return compare
    if isinstance(node, ast.BoolOp):
        parts = [_compile(v, names) for v in node.values]
        fn = np.logical_and if isinstance(node.op, ast.And) else np.logical_or
        return lambda env: reduce(fn, (p(env) for p in parts))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ParseError(f"unknown function in {ast.unparse(node.func)!r}")
        if node.keywords:
            raise ParseError("keyword arguments are not supported")
        fn = FUNCTIONS[node.func.id]
        args = [_compile(a, names) for a in node.args]
        if node.func.id == "piecewise" and (len(args) < 3 or len(args) % 2 == 0):
            raise ParseError("piecewise expects (cond, value, ..., default)")
        return lambda env: fn(*(a(env) for a in args))
    raise ParseError(f"unsupported syntax: {type(node).__name__}")


class Expr:
    """A compiled expression of ``(x, t)``.

    Calling the object broadcasts its arguments and always returns a float
    array of the broadcast shape (a 0-d array for scalar input), so constant
    expressions such as ``"1"`` still produce one value per sample point.
    """

    __slots__ = ("source", "params", "_fn")

    def __init__(self, source, params=None):
        self.source = str(source).strip()
        self.params = dict(params or {})
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"cannot parse expression {self.source!r}: {exc.msg}") from None
        names = {"x", "t", *self.params}
        self._fn = _compile(tree, names)

    def __call__(self, x=0.0, t=0.0):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        env = dict(self.params)
        env["x"] = x
        env["t"] = t
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._fn(env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x, t).shape).copy()

    def __reduce__(self):
        return (Expr, (self.source, self.params))

    def __repr__(self):
        return f"Expr({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and (self.source, self.params) == (other.source, other.params)

    def __hash__(self):
        return hash((self.source, tuple(sorted(self.params.items()))))
