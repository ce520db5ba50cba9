import math
from fractions import Fraction

import pytest

from invariant_integrals.catalog import (
    INVARIANT_FAMILIES,
    SYMMETRY_FAMILIES,
    CatalogSummary,
    ConditionError,
    FamilyId,
    builtin_catalog,
    check_entry,
    dump_catalog,
    instantiate_family,
    load_catalog,
    random_instance,
    random_params,
    symmetry_mutant,
    verify_catalog,
)
from invariant_integrals.expr import evaluate, parameters
from invariant_integrals.parse import parse
from invariant_integrals.quadrature import Verdict, integrate_folded_semi_infinite, refine_until_stable
from invariant_integrals.symmetry import Duality, classify_duality

PI2_8 = parse("pi^2/8")


class TestInstantiate:
    def test_arctan_power(self):
        assert instantiate_family(FamilyId.ARCTAN_POWER).expected == PI2_8

    def test_odd_log_palindromic(self):
        e = instantiate_family(FamilyId.ODD_LOG_PALINDROMIC, n=0, m=1, p=[1, 4, 1], q=[2, 7, 2], b=1)
        assert e.expected == parse("0")
        assert e.reference == {"b": 1.0}

    def test_as_printed_even_log(self):
        e = instantiate_family(FamilyId.EVEN_LOG_AS_PRINTED, m=0, p=[1, -1], q=[1, -1], n=1, b=0)
        assert e.expected is None
        assert e.spec.integrand == parse("ln(x)^2/(1+b*x+x^2)")
        assert integrate_folded_semi_infinite(e.spec.integrand, {"b": 0.0}).value == pytest.approx(
            math.pi**3 / 8, abs=1e-10
        )

    def test_corrected_even_log(self):
        e = instantiate_family(FamilyId.EVEN_LOG_CORRECTED, m=0, p=[1, -1], q=[1, 1], n=1, b=0)
        assert e.expected == parse("0")

    def test_log_palindromic_ratio(self):
        e = instantiate_family(FamilyId.LOG_PALINDROMIC_RATIO, p=[1, 2, 3], b=0)
        assert e.expected == parse("0")

    @pytest.mark.parametrize(
        "family, params, message",
        [
            (FamilyId.ODD_LOG_PALINDROMIC, dict(m=1, p=[1, 4, 2], q=[2, 7, 2]), "p is not palindromic"),
            (FamilyId.ODD_LOG_PALINDROMIC, dict(m=1, p=[1, 4, 1], q=[2, 7, 3]), "q is not palindromic"),
            (FamilyId.ODD_LOG_PALINDROMIC, dict(m=1, p=[1, 4, 1], q=[2, -7, 2]), "q must have positive"),
            (FamilyId.ODD_LOG_PALINDROMIC, dict(m=2, p=[1, 4, 1], q=[2, 7, 2]), "p must have 2m\\+1 = 5"),
            (FamilyId.EVEN_LOG_CORRECTED, dict(m=0, p=[1, 1], q=[1, 1]), "p is not antipalindromic"),
            (FamilyId.EVEN_LOG_CORRECTED, dict(m=0, p=[1, -1], q=[1, -1]), "q is not palindromic"),
            (FamilyId.EVEN_LOG_AS_PRINTED, dict(m=0, p=[1, -1], q=[1, 1]), "q is not antipalindromic"),
            (FamilyId.LOG_PALINDROMIC_RATIO, dict(p=[1, -2, 3]), "p must have positive"),
            (FamilyId.GR_4127_7, dict(n=0, b=-2), "b=-2.0 outside validity box"),
            (FamilyId.GR_4127_7, dict(n=-1), "n must be an integer >= 0"),
            (FamilyId.DERIVATIVE_N, dict(n=0), "n must be an integer >= 1"),
            (FamilyId.GR_4538_1, dict(func="asin"), "func must be"),
        ],
    )
    def test_condition_violations_are_named(self, family, params, message):
        with pytest.raises(ConditionError, match=message):
            instantiate_family(family, **params)

    def test_expected_values_are_parameter_free(self):
        for e in builtin_catalog():
            if e.expected is not None:
                assert not parameters(e.expected)

    def test_specs_evaluate(self):
        for e in builtin_catalog():
            v = e.spec.evaluate(0.7, e.reference)
            assert math.isfinite(v)


class TestRandom:
    def test_deterministic(self):
        assert random_instance(FamilyId.ODD_LOG_PALINDROMIC, 1) == random_instance(FamilyId.ODD_LOG_PALINDROMIC, 1)
        assert random_instance(FamilyId.ODD_LOG_PALINDROMIC, 1).expected == parse("0")

    def test_arctan_power_reference(self):
        e = random_instance(FamilyId.ARCTAN_POWER, 7)
        assert -5 <= e.reference["a"] <= 5
        assert e.expected == PI2_8

    def test_derivative_order(self):
        e = random_instance(FamilyId.DERIVATIVE_N, 3)
        assert 1 <= e.params["n"] <= 6
        assert e.expected == parse("0")

    @pytest.mark.parametrize("family", list(FamilyId))
    def test_bounds(self, family):
        for seed in range(30):
            params = random_params(family, seed)
            assert params.get("m", 0) <= 4 and params.get("n", 0) <= 6
            for key in ("p", "q"):
                cs = [Fraction(c) for c in params.get(key, ())]
                if family is FamilyId.EVEN_LOG_AS_PRINTED and cs:
                    # stored as (1 - x) times a palindromic free polynomial; recover it
                    cs = [sum(cs[: k + 1]) for k in range(len(cs) - 1)]
                for c in cs:
                    assert abs(c.numerator) <= 100 and c.denominator <= 100
            instantiate_family(family, **params)

    @pytest.mark.parametrize("family", SYMMETRY_FAMILIES)
    def test_mutants_break_symmetry(self, family):
        for seed in range(10):
            m = symmetry_mutant(family, seed)
            assert m.expected is None
            tag = classify_duality(m.spec.integrand, "x", dict(m.reference) or None).tag
            assert tag is not Duality.ANTI_DUAL
            if family is not FamilyId.LOG_PALINDROMIC_RATIO:
                with pytest.raises(ConditionError):
                    instantiate_family(family, **m.params)

    def test_mutant_needs_symmetry_family(self):
        with pytest.raises(ValueError):
            symmetry_mutant(FamilyId.ARCTAN_POWER, 0)


class TestVerify:
    def test_builtin_catalog_passes(self):
        summary = verify_catalog()
        assert summary.all_passed, [o.reason for o in summary.outcomes if not o.passed]
        assert summary.worst_deviation <= 1e-9

    def test_as_printed_entry_is_reported_not_invariant(self):
        e = instantiate_family(FamilyId.EVEN_LOG_AS_PRINTED)
        summary = verify_catalog([e])
        assert summary.passed == 1
        assert summary.outcomes[0].report.verdict is Verdict.NOT_INVARIANT

    def test_empty(self):
        summary = verify_catalog([])
        assert isinstance(summary, CatalogSummary)
        assert (summary.total, summary.passed, summary.worst_deviation) == (0, 0, 0.0)

    def test_wrong_expectation_fails(self):
        e = instantiate_family(FamilyId.ARCTAN_POWER)
        wrong = type(e)(e.family, e.spec, parse("pi^2/6"), e.params, e.reference)
        out = check_entry(wrong)
        assert not out.passed and "certified" in out.reason

    def test_every_family_is_in_the_builtin_catalog(self):
        assert {e.family for e in builtin_catalog()} == set(FamilyId)


class TestFileFormat:
    def test_round_trip_json(self):
        entries = builtin_catalog()
        back = load_catalog(dump_catalog(entries))
        assert [(e.family, e.spec, e.expected) for e in back] == [(e.family, e.spec, e.expected) for e in entries]

    def test_round_trip_lines(self):
        entries = builtin_catalog()[:5]
        text = dump_catalog(entries, lines=True)
        assert len(text.splitlines()) == 5
        assert [e.spec for e in load_catalog(text)] == [e.spec for e in entries]

    def test_empty_text(self):
        assert load_catalog("  \n") == []

    def test_expected_must_be_parameter_free(self):
        with pytest.raises(ConditionError):
            load_catalog('{"family": "ArctanPower", "params": {"a": 1}, "expected": "a*pi"}')

    def test_user_expectation_is_kept(self):
        [e] = load_catalog('{"family": "GR_4127_7", "params": {"n": 1, "b": "1/2"}, "expected": "0"}')
        assert e.reference == {"b": 0.5}
        assert e.expected == parse("0")


def test_as_printed_value_by_refinement_oracle():
    e = instantiate_family(FamilyId.EVEN_LOG_AS_PRINTED)
    oracle = refine_until_stable(e.spec.integrand, {"b": 0.0}, accuracy=1e-8)
    assert abs(oracle.value - math.pi**3 / 8) <= 1e-8


@pytest.mark.parametrize("family", INVARIANT_FAMILIES)
def test_random_instances_certify(family):
    # a fast slice; the full 100-per-family sweep lives in the acceptance suite
    for seed in range(10):
        out = check_entry(random_instance(family, seed), seed=seed)
        assert out.passed, (seed, out.reason)
        assert abs(out.report.certificate.numeric_value() - float(evaluate(out.entry.expected))) <= 1e-9
