"""A minimal arithmetic expression compiler for scene configs.

Grammar: numbers, named variables, ``+ - * /``, unary minus, the
functions ``sin``, ``cos``, ``exp``, and the constants ``pi`` and
``e``.  Compiled expressions evaluate on dual scalars, so configured
cocycles and sections are differentiable like everything else.

Parsing goes through :mod:`ast` with a strict whitelist — nothing
outside the grammar evaluates.
"""

from __future__ import annotations

import ast
import math

from . import dual as dm


class ExpressionError(ValueError):
    pass


_FUNCTIONS = {"sin": dm.sin, "cos": dm.cos, "exp": dm.exp}
_CONSTANTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: lambda a, b: a + b,
           ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b,
           ast.Div: lambda a, b: a / b}


def _check(node, variables):
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric constant {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in _CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(
                f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(
                f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if (not isinstance(node.func, ast.Name)
                or node.func.id not in _FUNCTIONS):
            raise ExpressionError("only sin, cos, exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(
                f"{node.func.id} takes exactly one positional argument")
        _check(node.args[0], variables)
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id] if node.id in env else _CONSTANTS[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env),
                                      _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return _FUNCTIONS[node.func.id](_eval(node.args[0], env))
    raise ExpressionError(f"unexpected node {type(node).__name__}")


def compile_expression(source, variables=("x",)):
    """Compile a config expression string into a callable of the named
    variables (in order).  Raises ExpressionError on anything outside
    the whitelisted grammar."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc}") from exc
    _check(tree, set(variables))

    def fn(*args):
        if len(args) != len(variables):
            raise TypeError(f"expected {len(variables)} arguments")
        return _eval(tree, dict(zip(variables, args)))

    fn.source = source
    return fn
