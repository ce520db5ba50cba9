"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (shown even without
``-s``) and fails if its work exceeds the stated runtime limit.
"""

import math
import random
import time
from contextlib import contextmanager

import pytest

from invariant_integrals.catalog import (
    INVARIANT_FAMILIES,
    SYMMETRY_FAMILIES,
    FamilyId,
    check_entry,
    instantiate_family,
    random_instance,
    symmetry_mutant,
)
from invariant_integrals.derivatives import build_derivative_integrand, derivative_coeffs
from invariant_integrals.detector import detect
from invariant_integrals.expr import differentiate, evaluate
from invariant_integrals.integral import IntegralSpec
from invariant_integrals.parse import parse, render
from invariant_integrals.prover import prove, verify_certificate
from invariant_integrals.quadrature import (
    Verdict,
    integrate_folded_semi_infinite,
    integrate_spec,
    refine_until_stable,
)

from .test_derivatives import _row_from_sympy

PI2_8 = 1.233700550136170
ZERO = parse("0")


@contextmanager
def criterion(capsys, number: int, title: str, limit: float | None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        in_time = limit is None or elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        budget = f" / limit {limit:g} s" if limit is not None else ""
        with capsys.disabled():
            print(f"\ncriterion {number}: {status}  {title}  ({elapsed:.2f} s{budget})")
    assert in_time, f"criterion {number} took {elapsed:.2f} s, limit {limit} s"


def test_criterion_1_coefficient_rows(capsys):
    with criterion(capsys, 1, "first four coefficient rows", 1.0):
        rows = {1: [1], 2: [1, -1], 3: [1, -6, 1], 4: [1, -23, 23, -1]}
        for n, row in rows.items():
            got = list(derivative_coeffs(n).coeffs)
            assert got == row and all(type(c) is int for c in got)


def test_criterion_2_recurrence_cross_check(capsys):
    with criterion(capsys, 2, "symbolic differentiation reproduces the next row, n = 1..5", 10.0):
        for n in range(1, 6):
            # exact: sympy differentiates the rendered integrand independently
            assert _row_from_sympy(render(build_derivative_integrand(n)), n) == list(derivative_coeffs(n + 1).coeffs)
            # the package's own derivative matches the next integrand pointwise
            d = differentiate(build_derivative_integrand(n), "a")
            nxt = build_derivative_integrand(n + 1)
            for xv, av in [(0.3, 0.7), (2.5, 1.9), (0.9, -1.2)]:
                assert evaluate(d, xv, {"a": av}) == pytest.approx(evaluate(nxt, xv, {"a": av}), rel=1e-11, abs=1e-14)


def test_criterion_3_row_symmetry(capsys):
    with criterion(capsys, 3, "row symmetry law for n = 1..64", 5.0):
        for n in range(1, 65):
            c = derivative_coeffs(n).coeffs
            assert len(c) == n and c[0] == 1 and abs(c[-1]) == 1
            sign = (-1) ** (n + 1)
            assert all(c[m - 1] == sign * c[n - m] for m in range(1, n + 1))


def test_criterion_4_value_reproduction(capsys):
    with criterion(capsys, 4, "arctan power integral equals pi^2/8 and is certified", 5.0):
        f = parse("atan(x^a)/(1+x^2)")
        for a in (-3, -0.5, 0, 0.5, 1, 2, 3, 7.3):
            assert abs(integrate_folded_semi_infinite(f, {"a": a}).value - PI2_8) <= 1e-10
        cert = prove(IntegralSpec.from_text("atan(x^a)/(1+x^2)", boxes={"a": (-8, 8)}))
        assert cert.proved and cert.value == parse("pi^2/8")
        assert cert.steps and all(s.checked is True for s in cert.steps)
        assert verify_certificate(cert) == []


def _zero_family_cases():
    F = FamilyId
    rng = random.Random(2024)
    for _ in range(5):
        z, a, r = rng.uniform(0.1, 2.5), rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5)
        yield instantiate_family(F.PERIODIC_LOG), {"z": z, "a": a, "r": r}
    for n in (0, 1, 2):
        for b in (-1, 0, 1, 3):
            yield instantiate_family(F.GR_4127_7, n=n, b=b), {"b": float(b)}
    for n, m, p, q in [(0, 1, [1, 4, 1], [2, 7, 2]), (1, 2, [3, -1, 5, -1, 3], [1, 2, 2, 2, 1])]:
        for b in (-1, 0, 3):
            yield instantiate_family(F.ODD_LOG_PALINDROMIC, n=n, m=m, p=p, q=q, b=b), {"b": float(b)}
    for m, p, q, n in [(0, [1, -1], [1, 1], 1), (1, [2, 1, -1, -2], [1, 3, 3, 1], 0)]:
        for b in (-1, 0, 3):
            e = instantiate_family(F.EVEN_LOG_CORRECTED, m=m, p=p, q=q, n=n, b=b)
            yield e, {"b": float(b)}
    for a, b in [(2, 3), (1, 5)]:
        e = instantiate_family(F.GR_4297_2, a=a, b=b)
        yield e, dict(e.reference)
    for p in ([1, 2, 3], [2, 1, 1, 2]):
        e = instantiate_family(F.LOG_PALINDROMIC_RATIO, p=p, b=1)
        yield e, dict(e.reference)


def test_criterion_5_zero_families(capsys):
    with criterion(capsys, 5, "zero-valued families integrate to 0 and certify Value(0)", 30.0):
        cases = list(_zero_family_cases())
        assert len(cases) == 5 + 12 + 6 + 6 + 2 + 2
        for entry, bindings in cases:
            value = integrate_spec(entry.spec, bindings).value
            assert abs(value) <= 1e-9, (entry.family, bindings, value)
            cert = prove(entry.spec)
            assert cert.proved and cert.value == ZERO, (entry.family, cert.conclusion)
            assert all(s.checked is True for s in cert.steps)


def test_criterion_6_as_printed_even_log(capsys):
    with criterion(capsys, 6, "as-printed even-log instance is pi^3/8 and not invariant", 5.0):
        entry = instantiate_family(FamilyId.EVEN_LOG_AS_PRINTED, m=0, p=[1, -1], q=[1, -1], n=1, b=0)
        value = integrate_spec(entry.spec, {"b": 0.0}).value
        assert value == pytest.approx(3.8758, abs=1e-4)
        assert abs(value - math.pi**3 / 8) <= 1e-10
        oracle = refine_until_stable(entry.spec.integrand, {"b": 0.0}, accuracy=1e-8)
        assert oracle.converged and abs(oracle.value - math.pi**3 / 8) <= 1e-8
        report = detect(entry.spec)
        assert report.verdict is Verdict.NOT_INVARIANT
        assert report.certificate is None
        corrected = instantiate_family(FamilyId.EVEN_LOG_CORRECTED, m=0, p=[1, -1], q=[1, 1], n=1, b=0)
        assert check_entry(corrected).passed


def test_criterion_7_property_suite(capsys):
    with criterion(capsys, 7, "100 random instances per family certify; symmetry mutants flip", 300.0):
        failures = []
        for family in INVARIANT_FAMILIES:
            for seed in range(100):
                out = check_entry(random_instance(family, seed), tol=1e-9, seed=seed)
                if not out.passed:
                    failures.append((family.value, seed, out.reason))
        assert failures == []
        for family in SYMMETRY_FAMILIES:
            flipped = sum(
                detect(symmetry_mutant(family, seed).spec, seed=seed).verdict is Verdict.NOT_INVARIANT
                for seed in range(100)
            )
            assert flipped >= 95, (family.value, flipped)


def test_criterion_8_detector_honesty(capsys):
    with criterion(capsys, 8, "1/(1+ax+x^2) is reported NotInvariant", None):
        spec = IntegralSpec.from_text("1/(1+a*x+x^2)", boxes={"a": (-1.9, 3)})
        report = detect(spec, samples=[{"a": 0.0}, {"a": 1.0}, {"a": 2.0}])
        assert report.verdict is Verdict.NOT_INVARIANT
        values = dict((b["a"], v) for b, v in report.probes)
        assert abs(values[0.0] - math.pi / 2) <= 1e-10
        assert abs(values[1.0] - 2 * math.pi / (3 * math.sqrt(3))) <= 1e-10
        assert abs(values[2.0] - 1.0) <= 1e-10
        assert len({round(v, 9) for v in values.values()}) == 3
