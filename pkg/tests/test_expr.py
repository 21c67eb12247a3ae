import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lambstring import ExprSyntaxError, differentiate, evaluate, parse_force, simplify, to_string
from lambstring.expr import Call, EvaluationError, Neg, Pow, Sub, Var, compile_expr
from lambstring._backend import get_kernels


def test_parse_examples():
    assert parse_force("-y") == Neg(Var())
    assert parse_force("-y^3 - y") == Sub(Neg(Pow(Var(), 3)), Var())
    assert isinstance(parse_force("-2*atan(y)").right, Call)


@pytest.mark.parametrize("src, y, expected", [
    ("1 - 2 - 3", 0.0, -4.0),
    ("8 / 4 / 2", 0.0, 1.0),
    ("-y^2", 3.0, -9.0),
    ("(-y)^2", 3.0, 9.0),
    ("2*y^-1", 4.0, 0.5),
    ("y - y^3", 2.0, -6.0),
    ("exp(0) + cos(0) + tanh(0) + sin(0) + atan(0)", 1.0, 2.0),
    ("1.5e1 * .5", 0.0, 7.5),
])
def test_precedence_and_associativity(src, y, expected):
    assert evaluate(parse_force(src), y) == pytest.approx(expected)


@pytest.mark.parametrize("src, offset", [
    ("y +", 3), ("y $ 2", 2), ("(y", 2), ("y^2.5", 2), ("y^2^3", 3), ("sinh(y)", 0), ("x", 0),
])
def test_syntax_errors_carry_offset(src, offset):
    with pytest.raises(ExprSyntaxError) as exc:
        parse_force(src)
    assert exc.value.offset == offset


@pytest.mark.parametrize("src, expected", [
    ("-y", "-1"), ("-y^3 - y", "-3*y^2 - 1"), ("sin(y)", "cos(y)"),
])
def test_differentiate_examples(src, expected):
    assert to_string(differentiate(parse_force(src))) == expected


def test_division_by_zero_is_an_evaluation_error():
    with pytest.raises(EvaluationError):
        evaluate(parse_force("1/y"), 0.0)
    with pytest.raises(EvaluationError):
        evaluate(parse_force("y^-2"), 0.0)


def test_simplify_folds_constants():
    assert to_string(simplify(parse_force("0*y + 1*y + 2*3"))) == "y + 6"


# random expressions from the grammar
leaf = st.one_of(st.just("y"), st.integers(0, 5).map(str), st.sampled_from(["0.5", "1.25"]))


def _node(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda s: f"-{s}"),
        st.tuples(children, st.integers(1, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        st.tuples(st.sampled_from(["sin", "cos", "tanh", "atan"]), children).map(
            lambda t: f"{t[0]}({t[1]})"),
    )


exprs = st.recursive(leaf, _node, max_leaves=8)
points = st.floats(-1.5, 1.5)


@settings(max_examples=150, deadline=None)
@given(src=exprs, y=points)
def test_print_parse_round_trip(src, y):
    e = parse_force(src)
    again = parse_force(to_string(e))
    assert evaluate(again, y) == pytest.approx(evaluate(e, y), rel=1e-12, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(src=exprs, y=points)
def test_derivative_matches_central_difference(src, y):
    e = parse_force(src)
    d = differentiate(e)
    h = 1e-5
    fd = (evaluate(e, y + h) - evaluate(e, y - h)) / (2 * h)
    scale = 1 + abs(evaluate(e, y)) + abs(fd)
    assume(math.isfinite(fd))
    assert evaluate(d, y) == pytest.approx(fd, abs=1e-4 * scale)


@settings(max_examples=150, deadline=None)
@given(src=exprs, y=points)
def test_simplify_preserves_value(src, y):
    e = parse_force(src)
    assert evaluate(simplify(e), y) == pytest.approx(evaluate(e, y), rel=1e-12, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(src=exprs, y=points)
@pytest.mark.parametrize("backend", ["python", "cython"])
def test_bytecode_matches_tree(backend, src, y):
    e = parse_force(src)
    bc = compile_expr(e)
    assert get_kernels(backend).eval_force(bc.code, bc.consts, y) == pytest.approx(evaluate(e, y), rel=1e-13,
                                                                 abs=1e-13)


def test_evaluate_vectorizes():
    ys = np.linspace(-2, 2, 9)
    assert np.allclose(evaluate(parse_force("y - y^3"), ys), ys - ys**3)
    assert evaluate(parse_force("3"), ys).shape == ys.shape
