"""Expression language: parsing, serialization, evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accrgeo import expr as ex
from accrgeo.jets import jet_space


def test_parse_basic_arithmetic():
    e = ex.parse("1 + 2 * 3")
    assert ex.eval_float(e, {}) == 7.0
    e = ex.parse("(1 + 2) * 3")
    assert ex.eval_float(e, {}) == 9.0
    with pytest.raises(ex.ParseError):
        ex.parse("2 ^ 3 ^")


def test_power_binds_tighter_than_unary_minus():
    e = ex.parse("-x^2")
    assert ex.eval_float(e, {"x": 3.0}) == -9.0


def test_negative_exponent():
    e = ex.parse("x ^ -2")
    assert ex.eval_float(e, {"x": 2.0}) == 0.25


def test_functions_require_parentheses():
    e = ex.parse("sin(x) + cos(y)")
    v = ex.eval_float(e, {"x": 0.3, "y": 1.1})
    assert v == pytest.approx(math.sin(0.3) + math.cos(1.1))
    with pytest.raises(ex.ParseError):
        ex.parse("foo(x)")      # unknown function name


def test_parse_error_reports_offset():
    with pytest.raises(ex.ParseError) as exc:
        ex.parse("1 + * 2")
    assert exc.value.offset == 4
    with pytest.raises(ex.ParseError) as exc:
        ex.parse("sin(x")
    assert "')'" in exc.value.expected
    with pytest.raises(ex.ParseError) as exc:
        ex.parse("1 + 2 $")
    assert exc.value.offset == 6


def test_free_vars():
    e = ex.parse("sin(x) * y + exp(z ^ 2)")
    assert ex.free_vars(e) == frozenset({"x", "y", "z"})
    assert ex.free_vars(ex.parse("1 + 2")) == frozenset()


def test_unbound_variable_raises():
    with pytest.raises(ex.EvalError):
        ex.eval_float(ex.parse("x + y"), {"x": 1.0})
    space = jet_space(1, 1)
    with pytest.raises(ex.EvalError):
        ex.eval_jet(ex.parse("x + y"), {"x": space.var(0, 1.0)})


def test_domain_errors_become_eval_errors():
    with pytest.raises(ex.EvalError):
        ex.eval_float(ex.parse("ln(x)"), {"x": -1.0})
    space = jet_space(1, 2)
    with pytest.raises(ex.EvalError):
        ex.eval_jet(ex.parse("sqrt(x)"), {"x": space.var(0, -2.0)})
    with pytest.raises(ex.EvalError):
        ex.eval_float(ex.parse("1 / x"), {"x": 0.0})


def test_serialize_round_trip_structural():
    texts = [
        "x + y * z", "-x ^ 2 + sin(x * y)", "exp(2 * arctan(sinh(t)))",
        "0.5 * ln(x1 ^ 2 + x2 ^ 2) - arctan(sinh(t))",
        "x ^ -3 / (1 - y)",
    ]
    for text in texts:
        e = ex.parse(text)
        again = ex.parse(ex.serialize(e))
        assert again == e


def test_operator_overloads_build_trees():
    x, y = ex.Var("x"), ex.Var("y")
    e = 2.0 * x + y ** 2 - ex.func("sin", x / y)
    v = ex.eval_float(e, {"x": 1.2, "y": 0.7})
    assert v == pytest.approx(2 * 1.2 + 0.49 - math.sin(1.2 / 0.7))


# ---------------------------------------------------------------------------
# Random expression property tests
# ---------------------------------------------------------------------------

_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=3.0).map(ex.Const),
    st.sampled_from(["x", "y", "z"]).map(ex.Var),
)


def _extend(children):
    safe_funcs = ["sin", "cos", "tanh", "arctan", "exp"]
    return st.one_of(
        st.tuples(children, children).map(lambda p: ex.Bin("+", *p)),
        st.tuples(children, children).map(lambda p: ex.Bin("-", *p)),
        st.tuples(children, children).map(lambda p: ex.Bin("*", *p)),
        children.map(ex.Neg),
        st.tuples(children, st.integers(1, 3)).map(
            lambda p: ex.Pow(p[0], float(p[1]))),
        st.tuples(st.sampled_from(safe_funcs), children).map(
            lambda p: ex.Func(p[0], p[1])),
    )


expr_strategy = st.recursive(_leaf, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expr_strategy)
def test_serialize_parse_identity(e):
    assert ex.parse(ex.serialize(e)) == e


@settings(max_examples=200, deadline=None)
@given(expr_strategy, st.floats(0.2, 1.8), st.floats(0.2, 1.8),
       st.floats(0.2, 1.8))
def test_float_and_jet_evaluation_agree(e, x, y, z):
    vals = {"x": x, "y": y, "z": z}
    f = ex.eval_float(e, vals)
    space = jet_space(3, 1)
    bindings = {n: space.var(i, v)
                for i, (n, v) in enumerate(vals.items())}
    j = ex.eval_jet(e, bindings)
    assert np.isfinite(f)
    assert j.value == pytest.approx(f, rel=1e-12, abs=1e-12)
