import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigma2.errors import (
    ExprSyntaxError,
    GuardViolation,
    MetricSpecError,
    NonIntegerExponent,
    NotPositiveDefinite,
    UnknownIdentifier,
)
from sigma2.expr import (
    BinOp,
    Call,
    Neg,
    Num,
    Pow,
    Var,
    catalog_metric,
    eval_expr,
    eval_expr_jet,
    load_metric_spec,
    parse_expr,
    resolve_metric,
    to_text,
)


def test_precedence_and_associativity():
    assert parse_expr("1 - 2 - 3") == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert parse_expr("8 / 4 / 2") == BinOp("/", BinOp("/", Num(8.0), Num(4.0)), Num(2.0))
    assert parse_expr("-x^2") == Neg(Pow(Var("x"), 2))
    assert parse_expr("2 * x^2") == BinOp("*", Num(2.0), Pow(Var("x"), 2))
    assert parse_expr("sin(x)^2") == Pow(Call("sin", Var("x")), 2)


def test_power_is_right_associative():
    # x^2^3 = x^(2^3)
    assert eval_expr(parse_expr("x^2^3"), (2.0, 0, 0)) == 256.0


def test_gv_warping_parse():
    e = parse_expr("(1 + x^2 + y^2)^2")
    assert e == Pow(BinOp("+", BinOp("+", Num(1.0), Pow(Var("x"), 2)), Pow(Var("y"), 2)), 2)
    assert eval_expr(e, (1.0, 2.0, 0.0)) == 36.0


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("2*(x")
    assert info.value.offset == 4
    assert info.value.expected == frozenset({")"})


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse_expr("1 + w")
    assert info.value.offset == 4


@pytest.mark.parametrize("text", ["x^1.5", "x^y", "x^(2)"])
def test_non_integer_exponent(text):
    with pytest.raises(NonIntegerExponent):
        parse_expr(text)


def test_negative_integer_exponent():
    assert eval_expr(parse_expr("x^-2"), (2.0, 0, 0)) == 0.25


def test_offsets_are_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("x + é")
    assert info.value.offset == 4


names = st.sampled_from(["x", "y", "z"])
leaf = st.one_of(
    st.floats(0, 100, allow_nan=False, allow_infinity=False).map(Num),
    names.map(Var),
)
exprs = st.recursive(
    leaf,
    lambda sub: st.one_of(
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda t: BinOp(*t)),
        sub.map(Neg),
        st.tuples(sub, st.integers(-3, 4)).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "sqrt"]), sub).map(lambda t: Call(*t)),
    ),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_round_trip(e):
    assert parse_expr(to_text(e)) == e


@settings(max_examples=100, deadline=None)
@given(exprs, st.tuples(*[st.floats(-2, 2)] * 3))
def test_jet_value_matches_float_evaluation(e, point):
    try:
        expected = eval_expr(e, point)
    except (ValueError, ZeroDivisionError, OverflowError):
        return
    if not math.isfinite(expected) or abs(expected) > 1e12:
        return
    try:
        value = eval_expr_jet(e, point, order=0).value
    except Exception:
        return  # singular points are rejected by the jet engine as well
    assert value == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_metric_spec_defaults_and_symmetry():
    chart = load_metric_spec('# comment\nname = "demo"\ng33 = "1 + x^2"\ng21 = "0.1*z"\n')
    assert chart.name == "demo"
    g = chart.evaluate((1.0, 0.0, 2.0))
    np.testing.assert_allclose(g, [[1, 0.2, 0], [0.2, 1, 0], [0, 0, 2]])


def test_metric_spec_name_default():
    assert load_metric_spec('g11 = "2"').name == "custom"


@pytest.mark.parametrize(
    "doc",
    [
        'g11 = "1"\ng11 = "2"',
        'g12 = "x"\ng21 = "y"',
        'g44 = "1"',
        "g11 = 1",
        'g11 = "1 +"',
        'guard = "x +"',
    ],
)
def test_metric_spec_errors(doc):
    with pytest.raises(MetricSpecError):
        load_metric_spec(doc)


def test_metric_spec_consistent_both_triangles():
    chart = load_metric_spec('g12 = "x"\ng21 = "x"')
    assert chart.components[0][1] == Var("x")


def test_guards():
    chart = load_metric_spec('g11 = "x"\nguard = "x, 2 - x"')
    chart.evaluate((1.0, 0, 0))
    with pytest.raises(GuardViolation):
        chart.evaluate((3.0, 0, 0))
    sphere = catalog_metric("round_sphere")
    with pytest.raises(GuardViolation):
        sphere.evaluate((0.0, 1.0, 0.0))


def test_not_positive_definite():
    chart = load_metric_spec('g11 = "x"')
    with pytest.raises(NotPositiveDefinite):
        chart.evaluate((-1.0, 0, 0))


def test_catalog():
    g = catalog_metric("gv_example").evaluate((1.0, 1.0, 5.0))
    np.testing.assert_allclose(np.diag(g), [1, 1, 9])
    with pytest.raises(MetricSpecError):
        catalog_metric("warped_template")
    assert catalog_metric("warped_template", "2 + x").evaluate((1.0, 0, 0))[2, 2] == 9.0
    with pytest.raises(MetricSpecError):
        catalog_metric("hyperbolic")


def test_resolve_metric_from_file(tmp_path):
    path = tmp_path / "m.metric"
    path.write_text('name = "file"\ng22 = "2"\n')
    assert resolve_metric(str(path)).name == "file"
    assert resolve_metric("flat").name == "flat"


def test_more_documented_examples():
    from sigma2 import jets
    from sigma2.errors import SingularInput

    assert parse_expr("x") == Var("x")
    f = parse_expr("1 + x^2 + y^2")
    j = eval_expr_jet(f, (0.0, 0.0, 0.0), order=2)
    assert j.to_dict() == {(0, 0, 0): 1.0, (2, 0, 0): 1.0, (0, 2, 0): 1.0}
    assert jets.MULTI_INDICES[0] == (0, 0, 0)
    assert eval_expr_jet(f, (1.0, 0.0, 0.0), order=0).value == 2.0
    with pytest.raises(SingularInput):
        eval_expr_jet(parse_expr("1/(x-1)"), (1.0, 0.0, 0.0))
    np.testing.assert_array_equal(catalog_metric("gv_example").evaluate((0, 0, 0)), np.eye(3))
    np.testing.assert_array_equal(catalog_metric("flat").evaluate((4, -2, 9)), np.eye(3))


def test_documents_resolve_to_catalog_charts():
    gv = load_metric_spec('g33 = "(1 + x^2 + y^2)^2"')
    assert gv.components == catalog_metric("gv_example").components
    assert load_metric_spec("").components == catalog_metric("flat").components
