import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invariant_integrals.expr import (
    ONE,
    PI,
    ZERO,
    DomainError,
    Number,
    Param,
    Product,
    Sum,
    UnboundSymbolError,
    Var,
    add,
    atan,
    cos,
    differentiate,
    evaluate,
    ln,
    mul,
    power,
    simplify_basic,
    substitute,
)
from invariant_integrals.parse import parse, render

from .strategies import bindings, fractions, safe_exprs

x, a = Var("x"), Param("a")


class TestCanonicalForm:
    def test_sums_are_flat_and_ordered(self):
        e = add(add(x, a), add(ONE, x))
        assert isinstance(e, Sum)
        assert not any(isinstance(t, Sum) for t in e.terms)
        assert e == add(ONE, mul(2, x), a)

    def test_products_are_flat_and_merge_bases(self):
        e = mul(mul(x, a), mul(x, 2))
        assert isinstance(e, Product)
        assert not any(isinstance(f, Product) for f in e.factors)
        assert e == mul(2, a, power(x, 2))

    def test_order_does_not_matter(self):
        assert add(x, a, atan(x)) == add(atan(x), a, x)
        assert mul(x, a, ln(x)) == mul(ln(x), x, a)
        assert hash(add(x, a)) == hash(add(a, x))

    def test_like_terms_cancel(self):
        assert add(x, mul(-1, x)) == ZERO
        assert mul(x, power(x, -1)) == ONE

    def test_pi_over_two(self):
        e = parse("pi/2")
        assert isinstance(e, Product)
        assert set(e.factors) == {Number(Fraction(1, 2)), PI}

    def test_immutable(self):
        with pytest.raises(AttributeError):
            x.name = "y"


class TestRational:
    @given(fractions, fractions)
    def test_sum_matches_cross_multiplication(self, p, q):
        got = add(Number(p), Number(q))
        num = p.numerator * q.denominator + q.numerator * p.denominator
        den = p.denominator * q.denominator
        assert isinstance(got, Number)
        assert got.value.numerator * den == num * got.value.denominator

    @given(fractions, fractions)
    def test_product_matches_cross_multiplication(self, p, q):
        got = mul(Number(p), Number(q))
        assert got.value.numerator * p.denominator * q.denominator == p.numerator * q.numerator * got.value.denominator

    @given(fractions)
    def test_lowest_terms(self, p):
        v = Number(p).value
        assert v.denominator > 0
        assert math.gcd(v.numerator, v.denominator) == 1

    def test_exact_rational_powers(self):
        assert power(Number(Fraction(4, 9)), Fraction(1, 2)) == Number(Fraction(2, 3))
        assert power(Number(2), -3) == Number(Fraction(1, 8))


class TestEvaluate:
    def test_arctan_weight_at_one(self):
        e = parse("atan(x^a)/(1+x^2)")
        for av in (-2.0, 0.0, 0.7, 5.0):
            assert evaluate(e, 1.0, {"a": av}) == pytest.approx(math.pi / 8, rel=1e-15)

    def test_periodic_log_vanishes_at_quarter_turn(self):
        e = parse("ln((z^2+(a+r*cos(phi))^2)/(z^2+(a-r*cos(phi))^2))", var="phi")
        for z, av, r in [(1, 2, 0.5), (0.3, -1, 2), (2, 0, 1)]:
            assert abs(evaluate(e, math.pi / 2, {"z": z, "a": av, "r": r}, "phi")) < 1e-15

    def test_first_derivative_integrand_vanishes_at_one(self):
        e = parse("x^a*ln(x)/((1+x^(2*a))*(1+x^2))")
        assert evaluate(e, 1.0, {"a": 1.7}) == 0.0

    def test_vectorized(self):
        xs = np.linspace(0.1, 3, 7)
        got = evaluate(parse("1/(1+x^2)"), xs)
        np.testing.assert_allclose(got, 1 / (1 + xs**2), rtol=1e-15)

    def test_ln_of_nonpositive_is_domain_error(self):
        with pytest.raises(DomainError):
            evaluate(ln(x), -1.0)
        with pytest.raises(DomainError):
            evaluate(ln(x), 0.0)

    def test_fractional_power_of_negative_base(self):
        with pytest.raises(DomainError):
            evaluate(power(x, a), -2.0, {"a": 0.5})
        assert evaluate(power(x, 3), -2.0) == -8.0

    def test_unbound_parameter(self):
        with pytest.raises(UnboundSymbolError):
            evaluate(mul(x, a), 1.0, {})

    def test_acot_principal_branch(self):
        assert evaluate(parse("acot(x)"), 1.0) == pytest.approx(math.pi / 4)
        assert evaluate(parse("acot(x)"), 1e-9) == pytest.approx(math.pi / 2, abs=1e-8)


class TestSubstitute:
    def test_reciprocal_in_log(self):
        assert substitute(ln(x), "x", power(x, -1)) == ln(power(x, -1))

    def test_half_turn_in_cosine(self):
        phi = Var("phi")
        assert substitute(cos(phi), "phi", add(phi, PI)) == cos(add(PI, phi))

    @given(safe_exprs)
    def test_identity_substitution(self, e):
        assert substitute(e, "x", x) == e

    @settings(max_examples=60)
    @given(safe_exprs, bindings, st.floats(min_value=0.05, max_value=10))
    def test_double_reciprocal_is_identity(self, e, b, xv):
        twice = substitute(substitute(e, "x", power(x, -1)), "x", power(x, -1))
        want = evaluate(e, xv, b)
        got = evaluate(twice, xv, b)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


class TestSimplifyBasic:
    def test_zero_power_drops(self):
        assert simplify_basic(parse("x^0*atan(x)")) == atan(x)

    def test_quotient_of_equals(self):
        assert simplify_basic(parse("(1+x^2)/(1+x^2)")) == ONE

    def test_weight_is_self_dual(self):
        e = parse("1/(1+(1/x)^2)*(1/x^2)")
        assert simplify_basic(e, "x", frozenset({"x"})) == parse("1/(1+x^2)")

    @settings(max_examples=80)
    @given(safe_exprs, bindings, st.floats(min_value=0.01, max_value=10))
    def test_preserves_value(self, e, b, xv):
        before = evaluate(e, xv, b)
        after = evaluate(simplify_basic(e), xv, b)
        assert after == pytest.approx(before, rel=1e-12, abs=1e-12)


class TestDifferentiate:
    @pytest.mark.parametrize(
        "text, wrt, expected",
        [
            ("x^3", "x", "3*x^2"),
            ("ln(x)", "x", "1/x"),
            ("atan(x)", "x", "1/(1+x^2)"),
            ("x^a", "a", "x^a*ln(x)"),
            ("sin(x)", "x", "cos(x)"),
        ],
    )
    def test_rules(self, text, wrt, expected):
        got = differentiate(parse(text), wrt)
        for xv in (0.3, 1.7):
            assert evaluate(got, xv, {"a": 1.3}) == pytest.approx(evaluate(parse(expected), xv, {"a": 1.3}))

    @settings(max_examples=40)
    @given(safe_exprs, bindings, st.floats(min_value=0.2, max_value=5))
    def test_matches_central_difference(self, e, b, xv):
        d = differentiate(e, "x")
        h = 1e-5
        fd = (evaluate(e, xv + h, b) - evaluate(e, xv - h, b)) / (2 * h)
        assert evaluate(d, xv, b) == pytest.approx(fd, rel=1e-4, abs=1e-4)
