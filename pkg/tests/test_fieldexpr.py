import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphoswarm import fieldexpr as fe


class TestParse:
    def test_ellipse_tree_structure(self):
        # division binds tighter than addition
        tree = fe.parse("1.0 / cos(theta) + ln(d)").root
        assert isinstance(tree, fe.BinOp) and tree.op == "+"
        assert tree.left == fe.BinOp("/", fe.Num(1.0), fe.Call("cos", fe.Var("theta")))
        assert tree.right == fe.Call("ln", fe.Var("d"))

    def test_single_variable(self):
        assert fe.parse("d").root == fe.Var("d")

    def test_negative_literal_inside_call(self):
        assert fe.parse("ln(-0.367378)").root == fe.Call("ln", fe.Num(-0.367378))

    def test_implicit_multiplication(self):
        assert fe.parse("3d").root == fe.BinOp("*", fe.Num(3.0), fe.Var("d"))
        assert fe.evaluate(fe.parse("3d+1"), 2.0, 0.0) == 7.0

    def test_power_binds_tighter_than_unary_minus(self):
        assert fe.evaluate(fe.parse("-2^2"), 0, 0) == -4.0
        assert fe.evaluate(fe.parse("2^-1"), 0, 0) == 0.5

    def test_power_right_associative(self):
        assert fe.evaluate(fe.parse("2^3^2"), 0, 0) == fe.evaluate(fe.parse("2^(3^2)"), 0, 0)

    def test_syntax_error_carries_offset(self):
        with pytest.raises(fe.ExprSyntaxError) as exc:
            fe.parse("1 + (2 *")
        assert exc.value.offset == 8

    def test_unknown_identifier(self):
        with pytest.raises(fe.UnknownIdentifierError) as exc:
            fe.parse("1 + foo")
        assert exc.value.name == "foo"
        assert exc.value.offset == 4

    def test_empty_input(self):
        with pytest.raises(fe.ExprSyntaxError):
            fe.parse("   ")

    def test_function_requires_parens(self):
        with pytest.raises(fe.ExprSyntaxError):
            fe.parse("sin d")


class TestEvaluate:
    def test_precedence_value(self):
        assert fe.evaluate(fe.parse("1/2+1"), 0.0, 0.0) == 1.5

    def test_identity_expression(self):
        assert fe.evaluate(fe.parse("d"), 7.5, 1.0) == 7.5

    def test_ellipse_at_unit_distance(self):
        assert fe.evaluate(fe.preset("ellipse"), 1.0, 0.0) == 1.0

    def test_ellipse_protected_division_at_right_angle(self):
        # cos(pi/2) is ~6e-17 in floats, inside the division guard
        assert fe.evaluate(fe.preset("ellipse"), math.e, math.pi / 2) == 1.0

    def test_protected_ln(self):
        assert fe.evaluate(fe.parse("ln(d)"), 0.0, 0.0) == 0.0
        v = fe.evaluate(fe.parse("ln(-0.367378)"), 0.0, 0.0)
        assert v == pytest.approx(math.log(0.367378), rel=1e-15)

    def test_protected_division_by_zero(self):
        assert fe.evaluate(fe.parse("1/theta"), 1.0, 0.0) == 0.0
        assert fe.evaluate(fe.parse("d/(d-d)"), 3.0, 0.0) == 0.0

    def test_exp_clamped(self):
        big = fe.evaluate(fe.parse("exp(d)"), 1000.0, 0.0)
        assert big == math.exp(50.0)
        small = fe.evaluate(fe.parse("exp(-d)"), 1000.0, 0.0)
        assert small == math.exp(-50.0)

    def test_power_is_exp_ln_form(self):
        # (-2)^3 uses |a|: exp(3*ln 2) = 8, not -8
        assert fe.evaluate(fe.parse("(0-2)^3"), 0.0, 0.0) == pytest.approx(8.0, rel=1e-12)
        # 0^b is exp(b*0) = 1 under ln(0) := 0
        assert fe.evaluate(fe.parse("(d-d)^2"), 5.0, 0.0) == 1.0

    def test_never_non_finite_on_grid(self):
        d = np.linspace(0.01, 100.0, 100)
        t = np.linspace(0.0, 2 * math.pi, 100, endpoint=False)
        D, T = np.meshgrid(d, t)
        for name in fe.PRESET_NAMES:
            vals = fe.evaluate_many(fe.preset(name), D.ravel(), T.ravel())
            assert vals.shape == (10_000,)
            assert np.all(np.isfinite(vals)), name


class TestPresets:
    def test_all_presets_parse(self):
        for name in fe.PRESET_NAMES:
            assert isinstance(fe.preset(name), fe.FieldExpr)

    def test_discs_contains_magic_literal(self):
        assert "-0.367378" in fe.preset_text("discs")

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            fe.preset("pentagon")

    def test_round_trip_presets(self):
        for name in fe.PRESET_NAMES:
            ex = fe.preset(name)
            assert fe.parse(fe.serialize(ex)) == ex

    def test_load_field_accepts_path(self, tmp_path):
        p = tmp_path / "custom.txt"
        p.write_text("d + theta\n")
        assert fe.evaluate(fe.load_field(str(p)), 2.0, 3.0) == 5.0


# random AST generation for round-trip and consistency properties
_leaf = st.one_of(
    st.floats(min_value=-100, max_value=100, allow_nan=False).map(lambda v: fe.Num(round(v, 6))),
    st.sampled_from(["d", "theta", "e"]).map(fe.Var),
)


def _node_strategy(children):
    return st.one_of(
        st.tuples(st.sampled_from(fe.FUNCTIONS), children).map(lambda t: fe.Call(*t)),
        children.map(fe.Neg),
        st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), children, children).map(
            lambda t: fe.BinOp(*t)
        ),
    )


_ast = st.recursive(_leaf, _node_strategy, max_leaves=25)


@given(_ast)
@settings(max_examples=200, deadline=None)
def test_serialize_parse_round_trip(node):
    expr = fe.FieldExpr(node)
    assert fe.parse(fe.serialize(expr)).root == node


@given(_ast, st.floats(0, 150, allow_nan=False), st.floats(0, 2 * math.pi, exclude_max=True))
@settings(max_examples=200, deadline=None)
def test_evaluators_agree_and_stay_finite(node, d, theta):
    expr = fe.FieldExpr(node)
    ref = fe.evaluate(expr, d, theta)
    assert math.isfinite(ref)
    assert fe.compile_scalar(expr)(d, theta) == ref
    vec = fe.evaluate_many(expr, np.array([d]), np.array([theta]))
    assert vec[0] == pytest.approx(ref, rel=1e-12, abs=1e-12)
