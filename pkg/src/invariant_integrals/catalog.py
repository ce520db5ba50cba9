"""Parameterized integral families, random instances, and a verify-all runner.

Structural family parameters (log powers ``n``, half-degrees ``m``,
coefficient lists ``p`` and ``q``, the arctangent power) are baked into the
integrand.  Scalar parameters (``a``, ``b``, ``z``, ``r``) stay free symbols
with a validity box; the values passed for them become the entry's
*reference binding*, which every probe of the entry includes.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .derivatives import build_derivative_integrand
from .detector import DetectionReport, detect
from .expr import MINUS_ONE, ONE, PI, ZERO, Expr, Param, Var, acot, add, atan, evaluate, ln, mul, parameters, power
from .integral import PERIODIC_2PI, SEMI_INFINITE, IntegralSpec, Parameter
from .parse import parse, render
from .quadrature import Verdict, sample_parameters
from .symmetry import PolyCoeffs

PI2_OVER_8 = mul(Fraction(1, 8), power(PI, 2))

# validity boxes (open intervals)
A_BOX = (-6.0, 6.0)  # arctangent power: random draws use [-5, 5]
DERIV_A_BOX = (-3.0, 3.0)
B_BOX = (-2.0, 6.0)  # 1 + b x + x^2 > 0 on x > 0 needs b > -2
RATIO_BOX = (0.0, 10.0)  # (a x + b)/(b x + a) > 0 on x > 0
Z_BOX = (0.0, 3.0)  # z != 0 keeps the log argument finite
AR_BOX = (-3.0, 3.0)

MAX_M = 4
MAX_N = 3
MAX_DERIVATIVE = 6
MAX_NUM = 100


class FamilyId(enum.Enum):
    GR_4538_1 = "GR_4538_1"
    ARCTAN_POWER = "ArctanPower"
    DERIVATIVE_N = "DerivativeN"
    PERIODIC_LOG = "PeriodicLog"
    GR_4127_7 = "GR_4127_7"
    ODD_LOG_PALINDROMIC = "OddLogPalindromic"
    EVEN_LOG_AS_PRINTED = "EvenLogAsPrinted"
    EVEN_LOG_CORRECTED = "EvenLogCorrected"
    GR_4297_2 = "GR_4297_2"
    LOG_PALINDROMIC_RATIO = "LogPalindromicRatio"


INVARIANT_FAMILIES = tuple(f for f in FamilyId if f is not FamilyId.EVEN_LOG_AS_PRINTED)
# families whose invariance hinges on a coefficient symmetry of p
SYMMETRY_FAMILIES = (
    FamilyId.ODD_LOG_PALINDROMIC,
    FamilyId.EVEN_LOG_CORRECTED,
    FamilyId.LOG_PALINDROMIC_RATIO,
)


class ConditionError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    family: FamilyId
    spec: IntegralSpec
    expected: Expr | None  # None means NotInvariant
    params: Mapping = field(default_factory=dict)
    reference: Mapping[str, float] = field(default_factory=dict)

    @property
    def expects_invariant(self) -> bool:
        return self.expected is not None

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "params": _jsonable(self.params),
            "expected": render(self.expected) if self.expected is not None else "NotInvariant",
        }


# ---------------------------------------------------------------- helpers


def _fractions(cs) -> tuple[Fraction, ...]:
    return tuple(Fraction(c) for c in cs)


def _jsonable(params: Mapping) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, (list, tuple)):
            out[k] = [str(Fraction(c)) for c in v]
        elif isinstance(v, Fraction):
            out[k] = str(v)
        else:
            out[k] = v
    return out


def _require(cond: bool, message: str):
    if not cond:
        raise ConditionError(message)


def _log_power(x: Expr, k: int) -> Expr:
    return power(ln(x), k)


def _weight(x: Expr) -> Expr:
    return power(add(ONE, mul(Param("b"), x), power(x, 2)), MINUS_ONE)


def _ref(name: str, value, box) -> dict:
    v = float(Fraction(value))
    _require(box[0] < v < box[1], f"{name}={v} outside validity box ({box[0]}, {box[1]})")
    return {name: v}


def _odd_length(name: str, cs, m: int):
    _require(len(cs) == 2 * m + 1, f"{name} must have 2m+1 = {2 * m + 1} coefficients, got {len(cs)}")


def _even_length(name: str, cs, m: int):
    _require(len(cs) == 2 * m + 2, f"{name} must have 2m+2 = {2 * m + 2} coefficients, got {len(cs)}")


def _palindromic_list(cs) -> bool:
    # index condition p_k = p_{len-1-k} on the list as given, zeros included
    return tuple(cs) == tuple(cs[::-1])


def _antipalindromic_list(cs) -> bool:
    return all(u == -v for u, v in zip(cs, cs[::-1]))


def _positive_coeffs(name: str, cs):
    _require(all(c > 0 for c in cs), f"{name} must have positive coefficients")


def _divide_one_minus_x(cs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Exact quotient of an antipalindromic odd-degree polynomial by (1 - x)."""
    # c(x) = (1 - x) s(x)  =>  s_0 = c_0,  s_k = c_k + s_{k-1}
    s, acc = [], Fraction(0)
    for c in cs[:-1]:
        acc += c
        s.append(acc)
    assert acc + cs[-1] == 0
    return tuple(s)


# ---------------------------------------------------------------- family builders


def _gr_4538_1(func: str = "atan", k: int = 2):
    _require(func in ("atan", "acot"), "func must be 'atan' or 'acot'")
    _require(isinstance(k, int) and k >= 1, "k must be a positive integer")
    x = Var("x")
    f = {"atan": atan, "acot": acot}[func]
    integrand = mul(f(power(x, k)), power(add(ONE, power(x, 2)), MINUS_ONE))
    return integrand, (), {}, PI2_OVER_8, ()


def _arctan_power(a=2):
    x = Var("x")
    integrand = mul(atan(power(x, Param("a"))), power(add(ONE, power(x, 2)), MINUS_ONE))
    return integrand, (Parameter("a", *A_BOX),), _ref("a", a, A_BOX), PI2_OVER_8, ()


def _derivative_n(n: int = 1, a=1):
    _require(isinstance(n, int) and n >= 1, "n must be an integer >= 1")
    integrand = build_derivative_integrand(n)
    return integrand, (Parameter("a", *DERIV_A_BOX),), _ref("a", a, DERIV_A_BOX), ZERO, ()


def _periodic_log(z=1, a=2, r=Fraction(1, 2)):
    integrand = parse("ln((z^2 + (a + r*cos(phi))^2)/(z^2 + (a - r*cos(phi))^2))", var="phi")
    params = (Parameter("a", *AR_BOX), Parameter("r", *AR_BOX), Parameter("z", *Z_BOX))
    ref = {**_ref("z", z, Z_BOX), **_ref("a", a, AR_BOX), **_ref("r", r, AR_BOX)}
    return integrand, params, ref, ZERO, ("z != 0 or |a| > |r|",)


def _gr_4127_7(n: int = 0, b=1):
    _require(isinstance(n, int) and n >= 0, "n must be an integer >= 0")
    x = Var("x")
    integrand = mul(_log_power(x, 2 * n + 1), _weight(x))
    return integrand, (Parameter("b", *B_BOX),), _ref("b", b, B_BOX), ZERO, ("b > -2",)


def _odd_log_palindromic(n: int = 0, m: int = 1, p=(1, 4, 1), q=(2, 7, 2), b=1):
    _require(isinstance(n, int) and n >= 0, "n must be an integer >= 0")
    _require(isinstance(m, int) and m >= 0, "m must be an integer >= 0")
    p, q = _fractions(p), _fractions(q)
    _odd_length("p", p, m)
    _odd_length("q", q, m)
    _require(any(p), "p must not be identically zero")
    _require(_palindromic_list(p), "p is not palindromic")
    _require(_palindromic_list(q), "q is not palindromic")
    _positive_coeffs("q", q)
    x = Var("x")
    integrand = mul(
        _log_power(x, 2 * n + 1),
        PolyCoeffs(p).to_expr("x"),
        power(PolyCoeffs(q).to_expr("x"), MINUS_ONE),
        _weight(x),
    )
    return integrand, (Parameter("b", *B_BOX),), _ref("b", b, B_BOX), ZERO, ("b > -2", "q_k > 0")


def _even_log_as_printed(m: int = 0, p=(1, -1), q=(1, -1), n: int = 1, b=0):
    _require(isinstance(n, int) and n >= 0, "n must be an integer >= 0")
    _require(isinstance(m, int) and m >= 0, "m must be an integer >= 0")
    p, q = _fractions(p), _fractions(q)
    _even_length("p", p, m)
    _even_length("q", q, m)
    _require(any(p), "p must not be identically zero")
    _require(_antipalindromic_list(p), "p is not antipalindromic")
    _require(_antipalindromic_list(q), "q is not antipalindromic")
    # both share the root x = 1; cancel it so the ratio is finite there
    s = _divide_one_minus_x(q)
    _positive_coeffs("q / (1 - x)", s)
    x = Var("x")
    ratio = mul(PolyCoeffs(_divide_one_minus_x(p)).to_expr("x"), power(PolyCoeffs(s).to_expr("x"), MINUS_ONE))
    integrand = mul(_log_power(x, 2 * n), ratio, _weight(x))
    return integrand, (Parameter("b", *B_BOX),), _ref("b", b, B_BOX), None, ("b > -2",)


def _even_log_corrected(m: int = 0, p=(1, -1), q=(1, 1), n: int = 1, b=0):
    _require(isinstance(n, int) and n >= 0, "n must be an integer >= 0")
    _require(isinstance(m, int) and m >= 0, "m must be an integer >= 0")
    p, q = _fractions(p), _fractions(q)
    _even_length("p", p, m)
    _even_length("q", q, m)
    _require(any(p), "p must not be identically zero")
    _require(_antipalindromic_list(p), "p is not antipalindromic")
    _require(_palindromic_list(q), "q is not palindromic")
    _positive_coeffs("q", q)
    x = Var("x")
    integrand = mul(
        _log_power(x, 2 * n),
        PolyCoeffs(p).to_expr("x"),
        power(PolyCoeffs(q).to_expr("x"), MINUS_ONE),
        _weight(x),
    )
    return integrand, (Parameter("b", *B_BOX),), _ref("b", b, B_BOX), ZERO, ("b > -2", "q_k > 0")


def _gr_4297_2(a=2, b=3):
    integrand = parse("ln((a*x + b)/(b*x + a))/(1 + x)^2")
    params = (Parameter("a", *RATIO_BOX), Parameter("b", *RATIO_BOX))
    return integrand, params, {**_ref("a", a, RATIO_BOX), **_ref("b", b, RATIO_BOX)}, ZERO, ("a > 0", "b > 0")


def _log_palindromic_ratio(p=(1, 2, 3), b=0):
    p = _fractions(p)
    _require(len(p) >= 1, "p must have at least one coefficient")
    _positive_coeffs("p", p)
    x = Var("x")
    ratio = mul(PolyCoeffs(p).to_expr("x"), power(PolyCoeffs(p).reversed().to_expr("x"), MINUS_ONE))
    integrand = mul(ln(ratio), _weight(x))
    return integrand, (Parameter("b", *B_BOX),), _ref("b", b, B_BOX), ZERO, ("b > -2", "p_k > 0")


_BUILDERS = {
    FamilyId.GR_4538_1: _gr_4538_1,
    FamilyId.ARCTAN_POWER: _arctan_power,
    FamilyId.DERIVATIVE_N: _derivative_n,
    FamilyId.PERIODIC_LOG: _periodic_log,
    FamilyId.GR_4127_7: _gr_4127_7,
    FamilyId.ODD_LOG_PALINDROMIC: _odd_log_palindromic,
    FamilyId.EVEN_LOG_AS_PRINTED: _even_log_as_printed,
    FamilyId.EVEN_LOG_CORRECTED: _even_log_corrected,
    FamilyId.GR_4297_2: _gr_4297_2,
    FamilyId.LOG_PALINDROMIC_RATIO: _log_palindromic_ratio,
}


def instantiate_family(family: FamilyId | str, **params) -> CatalogEntry:
    """Build a checked entry; a violated family condition raises ConditionError naming it."""
    family = FamilyId(family)
    integrand, parameters_, reference, expected, assumptions = _BUILDERS[family](**params)
    var = "phi" if family is FamilyId.PERIODIC_LOG else "x"
    domain = PERIODIC_2PI if family is FamilyId.PERIODIC_LOG else SEMI_INFINITE
    # a degenerate instance (palindromic p in a log ratio, say) can cancel a parameter away
    present = parameters(integrand)
    parameters_ = tuple(p for p in parameters_ if p.name in present)
    reference = {k: v for k, v in reference.items() if k in present}
    spec = IntegralSpec(integrand, var, domain, parameters_, assumptions)
    return CatalogEntry(family, spec, expected, dict(params), reference)


# ---------------------------------------------------------------- random instances


def _rand_fraction(rng: random.Random, positive: bool = False) -> Fraction:
    while True:
        num = rng.randint(1, MAX_NUM) if positive else rng.randint(-MAX_NUM, MAX_NUM)
        if num:
            return Fraction(num, rng.randint(1, MAX_NUM))


def _rand_in(rng: random.Random, lo: float, hi: float) -> Fraction:
    """Rational with numerator and denominator <= 100, strictly inside (lo, hi)."""
    while True:
        v = Fraction(rng.randint(-MAX_NUM, MAX_NUM), rng.randint(1, MAX_NUM))
        if lo < v < hi:
            return v


def _palindromic(half: Sequence[Fraction], odd: bool) -> list[Fraction]:
    # odd: length 2m+1 from m+1 free values, else length 2m+2 from m+1 values
    return list(half) + list(half[::-1][1:] if odd else half[::-1])


def _antipalindromic(half: Sequence[Fraction]) -> list[Fraction]:
    return list(half) + [-c for c in half[::-1]]


def random_params(family: FamilyId | str, seed: int) -> dict:
    """Family parameters drawn deterministically from ``seed`` (m <= 4, n <= 3)."""
    family = FamilyId(family)
    rng = random.Random(f"{family.value}:{seed}")
    b = _rand_in(rng, -1.5, 5.5)
    if family is FamilyId.GR_4538_1:
        return {"func": rng.choice(["atan", "acot"]), "k": rng.choice([2, 3])}
    if family is FamilyId.ARCTAN_POWER:
        return {"a": _rand_in(rng, -5, 5)}
    if family is FamilyId.DERIVATIVE_N:
        return {"n": rng.randint(1, MAX_DERIVATIVE), "a": _rand_in(rng, -2.5, 2.5)}
    if family is FamilyId.PERIODIC_LOG:
        return {"z": _rand_in(rng, 0.1, 2.5), "a": _rand_in(rng, -2.5, 2.5), "r": _rand_in(rng, -2.5, 2.5)}
    if family is FamilyId.GR_4127_7:
        return {"n": rng.randint(0, MAX_N), "b": b}
    if family is FamilyId.GR_4297_2:
        return {"a": _rand_in(rng, 0.1, 9), "b": _rand_in(rng, 0.1, 9)}
    if family is FamilyId.LOG_PALINDROMIC_RATIO:
        m = rng.randint(1, MAX_M)
        return {"p": [_rand_fraction(rng, True) for _ in range(m + 1)], "b": b}
    m, n = rng.randint(0, MAX_M), rng.randint(0, MAX_N)
    if family is FamilyId.ODD_LOG_PALINDROMIC:
        p = _palindromic([_rand_fraction(rng) for _ in range(m + 1)], odd=True)
        q = _palindromic([_rand_fraction(rng, True) for _ in range(m + 1)], odd=True)
        return {"n": n, "m": m, "p": p, "q": q, "b": b}
    if family is FamilyId.EVEN_LOG_CORRECTED:
        p = _antipalindromic([_rand_fraction(rng) for _ in range(m + 1)])
        q = _palindromic([_rand_fraction(rng, True) for _ in range(m + 1)], odd=False)
        return {"n": n, "m": m, "p": p, "q": q, "b": b}
    # as printed: p = (1 - x) r(x), q = (1 - x) s(x) with r, s palindromic of degree 2m
    r = _palindromic([_rand_fraction(rng) for _ in range(m + 1)], odd=True)
    s = _palindromic([_rand_fraction(rng, True) for _ in range(m + 1)], odd=True)
    times = lambda c: [c[0], *(c[k] - c[k - 1] for k in range(1, len(c))), -c[-1]]  # noqa: E731
    return {"m": m, "p": times(r), "q": times(s), "n": max(n, 1), "b": b}


def random_instance(family: FamilyId | str, seed: int) -> CatalogEntry:
    return instantiate_family(family, **random_params(family, seed))


def symmetry_mutant(family: FamilyId | str, seed: int) -> CatalogEntry:
    """A random instance with p_0 raised by 1, breaking the symmetry its invariance needs.

    Half-degrees are drawn from 1..4 so the perturbed coefficient always has
    a partner it no longer matches.  The entry expects NotInvariant.
    """
    family = FamilyId(family)
    if family not in SYMMETRY_FAMILIES:
        raise ValueError(f"{family.value} has no coefficient symmetry to break")
    params = random_params(family, seed)
    if "m" in params and params["m"] == 0:
        params = random_params(family, seed + 1_000_003)
        rng = random.Random(f"mutant-m:{seed}")
        while params.get("m", 1) == 0:
            params = random_params(family, rng.randrange(10**9))
    p = list(params["p"])
    p[0] += 1
    x = Var("x")
    if family is FamilyId.LOG_PALINDROMIC_RATIO:
        # perturb the numerator only; the denominator keeps the original reversal
        num = PolyCoeffs(p).to_expr("x")
        den = PolyCoeffs(params["p"]).reversed().to_expr("x")
        integrand = mul(ln(mul(num, power(den, MINUS_ONE))), _weight(x))
    else:
        n = params["n"]
        k = 2 * n + 1 if family is FamilyId.ODD_LOG_PALINDROMIC else 2 * n
        integrand = mul(
            _log_power(x, k),
            PolyCoeffs(p).to_expr("x"),
            power(PolyCoeffs(params["q"]).to_expr("x"), MINUS_ONE),
            _weight(x),
        )
    spec = IntegralSpec(integrand, "x", SEMI_INFINITE, (Parameter("b", *B_BOX),), ("b > -2",))
    mutated = {**params, "p": p}
    return CatalogEntry(family, spec, None, mutated, {"b": float(params["b"])})


# ---------------------------------------------------------------- built-in catalog


def builtin_catalog() -> list[CatalogEntry]:
    F = FamilyId
    out = [instantiate_family(F.GR_4538_1, func=f, k=k) for f in ("atan", "acot") for k in (2, 3)]
    out += [instantiate_family(F.ARCTAN_POWER, a=a) for a in (2, Fraction(-1, 2))]
    out += [instantiate_family(F.DERIVATIVE_N, n=n) for n in (1, 2, 3, 4)]
    out += [instantiate_family(F.PERIODIC_LOG)]
    out += [instantiate_family(F.GR_4127_7, n=n, b=1) for n in (0, 1, 2)]
    out += [
        instantiate_family(F.ODD_LOG_PALINDROMIC, n=0, m=1, p=[1, 4, 1], q=[2, 7, 2], b=1),
        instantiate_family(F.ODD_LOG_PALINDROMIC, n=1, m=2, p=[3, -1, 5, -1, 3], q=[1, 2, 2, 2, 1], b=0),
        instantiate_family(F.EVEN_LOG_AS_PRINTED, m=0, p=[1, -1], q=[1, -1], n=1, b=0),
        instantiate_family(F.EVEN_LOG_CORRECTED, m=0, p=[1, -1], q=[1, 1], n=1, b=0),
        instantiate_family(F.EVEN_LOG_CORRECTED, m=1, p=[2, 1, -1, -2], q=[1, 3, 3, 1], n=0, b=1),
        instantiate_family(F.GR_4297_2, a=2, b=3),
        instantiate_family(F.GR_4297_2, a=1, b=5),
        instantiate_family(F.LOG_PALINDROMIC_RATIO, p=[1, 2, 3], b=0),
        instantiate_family(F.LOG_PALINDROMIC_RATIO, p=[2, 1, 1, 2], b=1),
    ]
    return out


# ---------------------------------------------------------------- file format


def entry_from_dict(d: Mapping) -> CatalogEntry:
    family = FamilyId(d["family"])
    entry = instantiate_family(family, **dict(d.get("params", {})))
    expected = d.get("expected")
    if expected is None:
        return entry
    value = None if expected == "NotInvariant" else parse(expected, var=entry.spec.variable)
    if value is not None and parameters(value):
        raise ConditionError(f"expected value {expected!r} must be parameter-free")
    return CatalogEntry(entry.family, entry.spec, value, entry.params, entry.reference)


def dump_catalog(entries: Iterable[CatalogEntry], lines: bool = False) -> str:
    dicts = [e.to_dict() for e in entries]
    if lines:
        return "".join(json.dumps(d) + "\n" for d in dicts)
    return json.dumps(dicts, indent=2)


def load_catalog(text: str) -> list[CatalogEntry]:
    """Read either a JSON list of entries or one JSON object per line."""
    stripped = text.strip()
    if not stripped:
        return []
    if stripped.startswith("["):
        return [entry_from_dict(d) for d in json.loads(stripped)]
    return [entry_from_dict(json.loads(line)) for line in stripped.splitlines() if line.strip()]


# ---------------------------------------------------------------- verification


@dataclass(frozen=True)
class EntryOutcome:
    entry: CatalogEntry
    report: DetectionReport
    passed: bool
    deviation: float | None
    reason: str = ""


@dataclass(frozen=True)
class CatalogSummary:
    outcomes: tuple[EntryOutcome, ...]

    @property
    def total(self) -> int:
        return len(self.outcomes)

    @property
    def passed(self) -> int:
        return sum(o.passed for o in self.outcomes)

    @property
    def failed(self) -> int:
        return self.total - self.passed

    @property
    def all_passed(self) -> bool:
        return self.failed == 0

    @property
    def worst_deviation(self) -> float:
        devs = [o.deviation for o in self.outcomes if o.deviation is not None]
        return max(devs, default=0.0)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "passed": self.passed,
            "failed": self.failed,
            "worst_deviation": self.worst_deviation,
            "entries": [
                {
                    **o.entry.to_dict(),
                    "passed": o.passed,
                    "deviation": o.deviation,
                    "reason": o.reason,
                    "report": o.report.to_dict(),
                }
                for o in self.outcomes
            ],
        }


def entry_samples(entry: CatalogEntry, count: int, seed: int) -> list[dict]:
    """The reference binding followed by ``count - 1`` low-discrepancy draws."""
    if not entry.spec.parameters:
        return [{}, {}]
    return [dict(entry.reference)] + sample_parameters(entry.spec, max(count - 1, 1), seed)


def check_entry(entry: CatalogEntry, tol: float = 1e-9, samples: int = 3, seed: int = 0) -> EntryOutcome:
    report = detect(entry.spec, tol=tol, samples=entry_samples(entry, samples, seed))
    if entry.expected is None:
        ok = report.verdict is Verdict.NOT_INVARIANT
        return EntryOutcome(entry, report, ok, None, "" if ok else f"expected NotInvariant, got {report.verdict.value}")
    if report.verdict is not Verdict.INVARIANT:
        return EntryOutcome(entry, report, False, None, f"expected Invariant, got {report.verdict.value}")
    expected = float(evaluate(entry.expected))
    deviation = abs(report.value_estimate - expected)
    if report.certificate is None:
        return EntryOutcome(entry, report, False, deviation, "no certificate")
    certified = report.certificate.numeric_value()
    if abs(certified - expected) > tol:
        return EntryOutcome(entry, report, False, deviation, f"certified {certified!r}, expected {expected!r}")
    if deviation > tol:
        return EntryOutcome(entry, report, False, deviation, f"estimate off by {deviation:.3g}")
    return EntryOutcome(entry, report, True, deviation)


def verify_catalog(
    entries: Iterable[CatalogEntry] | None = None, tol: float = 1e-9, samples: int = 3, seed: int = 0
) -> CatalogSummary:
    """Run the detector over ``entries`` (the built-in catalog by default)."""
    if entries is None:
        entries = builtin_catalog()
    return CatalogSummary(tuple(check_entry(e, tol, samples, seed) for e in entries))
