"""The whitelisted expression compiler for scene configs."""

import math

import pytest

from gpdlab.dual import Dual, deriv, value
from gpdlab.expr import ExpressionError, compile_expression


def test_basic_arithmetic():
    f = compile_expression("0.4*sin(x) + 0.2*cos(2*x)")
    x = 1.3
    assert f(x) == pytest.approx(0.4 * math.sin(x) + 0.2 * math.cos(2 * x))


def test_constants_and_unary():
    f = compile_expression("-x + pi/2 - (+e)")
    assert f(1.0) == pytest.approx(-1.0 + math.pi / 2 - math.e)


def test_dual_evaluation():
    f = compile_expression("exp(sin(x))")
    out = f(Dual(0.7, 1.0))
    assert value(out) == pytest.approx(math.exp(math.sin(0.7)))
    assert deriv(out) == pytest.approx(
        math.exp(math.sin(0.7)) * math.cos(0.7))


def test_multiple_variables():
    f = compile_expression("x*sin(t)", variables=("x", "t"))
    assert f(2.0, math.pi / 2) == pytest.approx(2.0)
    with pytest.raises(TypeError):
        f(1.0)


def test_division():
    f = compile_expression("x / (2 + cos(x))")
    assert f(1.0) == pytest.approx(1.0 / (2 + math.cos(1.0)))


@pytest.mark.parametrize("bad", [
    "__import__('os')",
    "x ** 2",
    "x.real",
    "[1, 2]",
    "lambda y: y",
    "x if x else 0",
    "x % 2",
    "sin(x, 2)",
    "tan(x)",
    "unknown_name",
    "sin()",
    "'str'",
    "x @ x",
    "f(x)",
])
def test_rejects_non_whitelisted(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad)


def test_rejects_syntax_error():
    with pytest.raises(ExpressionError):
        compile_expression("1 +")


def test_source_attribute():
    assert compile_expression("x").source == "x"
