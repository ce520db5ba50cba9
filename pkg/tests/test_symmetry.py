from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invariant_integrals.derivatives import build_derivative_integrand
from invariant_integrals.expr import ZERO, evaluate, mul
from invariant_integrals.parse import parse
from invariant_integrals.symmetry import (
    Duality,
    PolyCoeffs,
    classify_duality,
    fold_image,
    fold_residue,
    is_antipalindromic,
    is_palindromic,
    weight_table,
)

from .strategies import fractions

half_lists = st.lists(fractions, min_size=1, max_size=5)


@pytest.mark.parametrize(
    "coeffs, pal, anti",
    [
        ([1, Fraction(7, 3), 1], True, False),
        ([1, -1], False, True),
        ([2, 5, 5, 2], True, False),
        ([1, 3, -3, -1], False, True),
        ([1, 0, 1], True, False),
        ([0, 1, 0], False, False),  # the polynomial x: trailing zeros do not count
    ],
)
def test_palindromy(coeffs, pal, anti):
    assert is_palindromic(coeffs) is pal
    assert is_antipalindromic(coeffs) is anti


@given(st.lists(fractions, max_size=8))
def test_reversal_law(cs):
    p = PolyCoeffs(cs)
    assert is_palindromic(p) == (p.reversed() == p)
    assert is_antipalindromic(p) == (p.reversed() == -p)


def test_trailing_zeros_are_dropped():
    assert PolyCoeffs([1, 2, 0, 0]).degree == 1
    assert PolyCoeffs([0, 0]).coeffs == ()


@pytest.mark.parametrize(
    "f, image",
    [
        ("atan(x^a)/(1+x^2)", "atan(x^(-a))/(1+x^2)"),
        ("1/(1+x^2)", "1/(1+x^2)"),
        ("ln(x)/(1+b*x+x^2)", "-ln(x)/(1+b*x+x^2)"),
    ],
)
def test_fold_image(f, image):
    assert fold_image(parse(f), "x") == parse(image)


@pytest.mark.parametrize("xv, b", [(0.5, 0.0), (0.5, 1.0), (2.0, 0.0), (2.0, 1.0)])
def test_fold_image_of_odd_log_numerically(xv, b):
    f = parse("ln(x)/(1+b*x+x^2)")
    img = fold_image(f, "x")
    assert evaluate(img, xv, {"b": b}) == pytest.approx(evaluate(f, 1 / xv, {"b": b}) / xv**2, rel=1e-14)


@pytest.mark.parametrize(
    "f, residue",
    [
        ("atan(x^a)/(1+x^2)", "pi/(2*(1+x^2))"),
        ("ln(x)^3/(1+x^2)", "0"),
        ("1/(1+x^2)", "2/(1+x^2)"),
    ],
)
def test_fold_residue(f, residue):
    assert fold_residue(parse(f), "x") == parse(residue)


@pytest.mark.parametrize("b", [Fraction(-19, 10), Fraction(-1, 2), 0, 1, Fraction(13, 4), 50])
def test_weights_are_self_dual(b):
    w = parse(f"1/(1 + ({b})*x + x^2)")
    assert fold_image(w, "x") == w


def test_table_weights_are_self_dual():
    for w, _ in weight_table("x"):
        assert fold_image(w, "x") == w


@settings(max_examples=50)
@given(st.sampled_from(["atan(x^a)/(1+x^2)", "ln(x)^2/(1+b*x+x^2)", "x/(1+x)^3", "cos(x)*atan(x)"]),
       st.floats(min_value=0.05, max_value=20))
def test_fold_is_an_involution(text, xv):
    f = parse(text)
    twice = fold_image(fold_image(f, "x"), "x")
    b = {"a": 1.3, "b": 0.7}
    assert evaluate(twice, xv, b) == pytest.approx(evaluate(f, xv, b), rel=1e-12)


@settings(max_examples=60)
@given(half_lists, half_lists.map(lambda h: [abs(c) + 1 for c in h]), st.booleans(), st.floats(min_value=0.05, max_value=20))
def test_palindromic_ratio_law(p_half, q_half, odd, xv):
    def pal(h):
        return h + h[::-1][1:] if odd else h + h[::-1]

    # keep both lists the same length so the ratio is degree-balanced
    n = min(len(p_half), len(q_half))
    p_half, q_half = p_half[:n], q_half[:n]
    P, Q = PolyCoeffs(pal(p_half)), PolyCoeffs(pal(q_half))
    r = mul(P.to_expr(), Q.to_expr() ** -1)
    y = 1 / xv
    assert evaluate(r, y) == pytest.approx(evaluate(r, xv), rel=1e-12, abs=1e-14)

    # antipalindromic over palindromic, both of odd degree: the ratio flips sign
    A = PolyCoeffs(p_half + [-c for c in p_half[::-1]])
    S = PolyCoeffs(q_half + q_half[::-1])
    s = mul(A.to_expr(), S.to_expr() ** -1)
    assert evaluate(s, y) == pytest.approx(-evaluate(s, xv), rel=1e-12, abs=1e-12)


class TestClassify:
    def test_first_derivative_is_anti_dual(self):
        assert classify_duality(build_derivative_integrand(1), "x").tag is Duality.ANTI_DUAL

    def test_arctan_has_constant_residue(self):
        cls = classify_duality(parse("atan(x^a)/(1+x^2)"), "x")
        assert cls.tag is Duality.CONSTANT_RESIDUE
        assert cls.constant == parse("pi/2")
        assert cls.residue == parse("pi/(2*(1+x^2))")

    def test_corrected_even_log_is_anti_dual(self):
        f = parse("(1-x)/((1+x)*(1+x^2))*ln(x)^2")
        assert classify_duality(f, "x").tag is Duality.ANTI_DUAL
        xs = np.random.default_rng(5).uniform(0.05, 20, 20)
        res = evaluate(f, xs) + evaluate(f, 1 / xs) / xs**2
        assert np.max(np.abs(res)) < 1e-14

    def test_self_dual(self):
        assert classify_duality(parse("ln(x)^2/(1+x^2)"), "x").tag is Duality.SELF_DUAL

    def test_neither(self):
        assert classify_duality(parse("1/(1+x)"), "x").tag is Duality.NEITHER

    @pytest.mark.parametrize("n", range(1, 9))
    def test_every_derivative_is_anti_dual(self, n):
        assert classify_duality(build_derivative_integrand(n), "x").tag is Duality.ANTI_DUAL

    def test_residue_of_anti_dual_is_zero(self):
        assert fold_residue(build_derivative_integrand(3), "x") == ZERO
