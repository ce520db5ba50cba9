"""Certificate-producing proofs of parameter invariance.

The method: split the domain, map the second piece onto the first by a
formal substitution (x -> 1/x on (0, inf), phi -> phi + pi on (0, 2pi)),
rewrite the combined integrand with the identity table, and read off a
parameter-free value when the result is 0 or a constant times a weight with
a tabulated integral.

Every step is numerically self-checking at 20 random valid points, so a
certificate can be re-verified without trusting the rewriter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .expr import (
    MINUS_ONE,
    ONE,
    PI,
    ZERO,
    EvaluationError,
    Expr,
    Var,
    add,
    evaluate,
    has_symbol,
    magnitude,
    mul,
    parameters,
    power,
    simplify_basic,
    substitute,
)
from .integral import IntegralSpec
from .parse import parse, render
from .rewrite import Context
from .rewrite import rewrite as _rewrite
from .rewrite import rewrite_with_trace as _rewrite_with_trace
from .symmetry import fold_image_raw, weight_table

CHECK_POINTS = 20
CHECK_RTOL = 1e-9
CHECK_SEED = 20240601


class DomainMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ProofStep:
    """One move.  ``relation`` says how ``after`` must relate to ``before``:

    - ``equal``: pointwise identity
    - ``fold``: after(x) = before(x) + before(1/x)/x^2
    - ``shift``: after(phi) = before(phi) + before(phi + pi)
    - ``integrate``: after is the integral of before over the reduced domain,
      before == (after / base) * weight pointwise
    """

    rule: str
    justification: str
    relation: str
    before: Expr
    after: Expr
    weight: Expr | None = None
    base: Expr | None = None
    checked: bool | None = None

    def to_dict(self) -> dict:
        d = {
            "rule": self.rule,
            "justification": self.justification,
            "relation": self.relation,
            "before": render(self.before),
            "after": render(self.after),
            "checked": self.checked,
        }
        if self.weight is not None:
            d["weight"] = render(self.weight)
            d["base"] = render(self.base)
        return d

    @classmethod
    def from_dict(cls, d: Mapping, var: str) -> ProofStep:
        return cls(
            d["rule"],
            d.get("justification", ""),
            d["relation"],
            parse(d["before"], var=var),
            parse(d["after"], var=var),
            parse(d["weight"], var=var) if d.get("weight") else None,
            parse(d["base"], var=var) if d.get("base") else None,
            d.get("checked"),
        )


@dataclass(frozen=True)
class Conclusion:
    value: Expr | None  # None means NotProved
    reason: str = ""

    @property
    def proved(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class ProofCertificate:
    spec: IntegralSpec
    steps: tuple[ProofStep, ...]
    conclusion: Conclusion
    assumptions: tuple[str, ...] = field(default=())

    @property
    def proved(self) -> bool:
        return self.conclusion.proved

    @property
    def value(self) -> Expr | None:
        return self.conclusion.value

    def numeric_value(self) -> float | None:
        return None if self.value is None else float(evaluate(self.value))

    def to_dict(self) -> dict:
        if self.proved:
            conclusion = {"kind": "value", "value": render(self.value), "numeric": self.numeric_value()}
        else:
            conclusion = {"kind": "not_proved", "reason": self.conclusion.reason}
        return {
            "spec": self.spec.to_dict(),
            "assumptions": list(self.assumptions),
            "steps": [s.to_dict() for s in self.steps],
            "conclusion": conclusion,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> ProofCertificate:
        spec = IntegralSpec.from_dict(d["spec"])
        steps = tuple(ProofStep.from_dict(s, spec.variable) for s in d["steps"])
        c = d["conclusion"]
        if c["kind"] == "value":
            conclusion = Conclusion(parse(c["value"], var=spec.variable))
        else:
            conclusion = Conclusion(None, c.get("reason", ""))
        return cls(spec, steps, conclusion, tuple(d.get("assumptions", ())))


# ---------------------------------------------------------------- numeric self-check


def _check_points(spec: IntegralSpec, n: int, seed: int):
    rng = np.random.default_rng(seed)
    if spec.domain.kind == "semi-infinite":
        xs = np.exp(rng.uniform(-3.0, 3.0, n))
    else:
        xs = rng.uniform(0.0, 2 * math.pi, n)
    bindings = []
    for _ in range(n):
        b = {}
        for p in spec.parameters:
            w = p.hi - p.lo
            b[p.name] = float(rng.uniform(p.lo + 0.05 * w, p.hi - 0.05 * w))
        bindings.append(b)
    return xs, bindings


def _close(lhs: float, rhs: float, scale: float, rtol: float) -> bool:
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return False
    return abs(lhs - rhs) <= rtol * max(scale, abs(lhs), abs(rhs)) + 1e-300


def check_step(step: ProofStep, spec: IntegralSpec, n: int = CHECK_POINTS, rtol: float = CHECK_RTOL, seed: int = CHECK_SEED) -> bool:
    """Evaluate the step's relation at ``n`` random valid points."""
    var = spec.variable
    xs, bindings = _check_points(spec, n, seed)
    try:
        for x, b in zip(xs, bindings):
            x = float(x)
            after = evaluate(step.after, x, b, var)
            scale = magnitude(step.after, x, b, var)
            if step.relation == "equal":
                lhs = evaluate(step.before, x, b, var)
                scale = max(scale, magnitude(step.before, x, b, var))
            elif step.relation == "fold":
                f1 = evaluate(step.before, x, b, var)
                f2 = evaluate(step.before, 1 / x, b, var) / x**2
                lhs = f1 + f2
                scale += abs(f1) + abs(f2)
            elif step.relation == "shift":
                f1 = evaluate(step.before, x, b, var)
                f2 = evaluate(step.before, x + math.pi, b, var)
                lhs = f1 + f2
                scale += abs(f1) + abs(f2)
            elif step.relation == "integrate":
                lhs = evaluate(step.before, x, b, var)
                if step.weight is None:
                    after, scale = 0.0, magnitude(step.before, x, b, var)
                else:
                    c = evaluate(step.after, x, b, var) / evaluate(step.base, x, b, var)
                    after = c * evaluate(step.weight, x, b, var)
                    scale = max(abs(after), magnitude(step.before, x, b, var))
            else:
                return False
            if not _close(lhs, after, scale, rtol):
                return False
    except (EvaluationError, ZeroDivisionError, OverflowError):
        return False
    return True


# ---------------------------------------------------------------- proof moves


def _context(spec: IntegralSpec) -> Context:
    return Context(spec.variable, spec.positive_names)


def split_and_fold(spec: IntegralSpec) -> tuple[Expr, ProofStep]:
    """Split (0, inf) at 1 and map (1, inf) onto (0, 1) by x -> 1/x."""
    if spec.domain.kind != "semi-infinite":
        raise DomainMismatch(f"split_and_fold needs (0, inf), got {spec.domain.kind}")
    f, var = spec.integrand, spec.variable
    combined = simplify_basic(add(f, fold_image_raw(f, var)), var, spec.positive_names)
    step = ProofStep(
        "split_and_fold",
        f"int_0^inf = int_0^1 + int_1^inf; {var} -> 1/{var}, d{var} -> -d{var}/{var}^2 on the second piece",
        "fold",
        f,
        combined,
    )
    return combined, step


def _is_two_pi(e: Expr) -> bool:
    return e == mul(2, PI)


def half_period_shift(spec: IntegralSpec) -> tuple[Expr, ProofStep]:
    """Split (0, 2pi) at pi and map (pi, 2pi) onto (0, pi) by phi -> phi + pi."""
    if spec.domain.kind != "periodic" or not _is_two_pi(spec.domain.period):
        raise DomainMismatch("half_period_shift needs a 2*pi-periodic domain")
    f, var = spec.integrand, spec.variable
    combined = simplify_basic(add(f, substitute(f, var, add(Var(var), PI))), var, spec.positive_names)
    step = ProofStep(
        "half_period_shift",
        f"int_0^(2pi) = int_0^pi + int_pi^(2pi); {var} -> {var} + pi on the second piece",
        "shift",
        f,
        combined,
    )
    return combined, step


def rewrite_with_trace(e: Expr, spec_or_ctx) -> tuple[Expr, list[ProofStep]]:
    """Apply the identity table to a fixed point, one ProofStep per rule application."""
    ctx = _context(spec_or_ctx) if isinstance(spec_or_ctx, IntegralSpec) else spec_or_ctx
    out, trace = _rewrite_with_trace(e, ctx)
    steps = [ProofStep(rule.name, rule.justification, "equal", before, after) for rule, before, after in trace]
    return out, steps


def _parameter_free(e: Expr, var: str) -> bool:
    return not has_symbol(e, var) and not parameters(e)


def _conclude(reduced: Expr, spec: IntegralSpec) -> ProofStep | None:
    var = spec.variable
    if reduced == ZERO:
        return ProofStep("integrate", "the integral of 0 is 0", "integrate", reduced, ZERO)
    ctx = _context(spec)
    if spec.domain.kind == "semi-infinite":
        for w, base in weight_table(var):
            c = _rewrite(mul(reduced, power(w, MINUS_ONE)), ctx)
            if _parameter_free(c, var):
                just = f"int_0^1 {render(w)} d{var} = {render(base)}"
                return ProofStep("integrate", just, "integrate", reduced, mul(c, base), w, base)
        return None
    if _parameter_free(reduced, var):
        return ProofStep(
            "integrate", f"int_0^pi c d{var} = c*pi", "integrate", reduced, mul(reduced, PI), ONE, PI
        )
    return None


def _assumptions(spec: IntegralSpec) -> tuple[str, ...]:
    out = list(spec.assumptions)
    if spec.domain.kind == "semi-infinite":
        out.append(f"{spec.variable} > 0 on the integration domain")
    for p in spec.parameters:
        out.append(f"{p.lo} < {p.name} < {p.hi}")
    return tuple(dict.fromkeys(out))


def prove(spec: IntegralSpec, check: bool = True) -> ProofCertificate:
    """Try the split/substitute/rewrite proof; NotProved is a normal outcome."""
    assumptions = _assumptions(spec)
    try:
        if spec.domain.kind == "semi-infinite":
            combined, first = split_and_fold(spec)
        else:
            combined, first = half_period_shift(spec)
    except DomainMismatch as exc:
        return ProofCertificate(spec, (), Conclusion(None, str(exc)), assumptions)

    reduced, steps = rewrite_with_trace(combined, spec)
    steps = [first, *steps]
    last = _conclude(reduced, spec)
    if last is not None:
        steps.append(last)
    if check:
        steps = [replace(s, checked=check_step(s, spec)) for s in steps]
    steps = tuple(steps)

    if last is None:
        reason = f"reduced integrand {render(reduced)} is neither 0 nor a constant times a tabulated weight"
        return ProofCertificate(spec, steps, Conclusion(None, reason), assumptions)
    bad = [i for i, s in enumerate(steps) if s.checked is False]
    if bad:
        reason = f"numeric self-check failed at step {bad[0]} ({steps[bad[0]].rule})"
        return ProofCertificate(spec, steps, Conclusion(None, reason), assumptions)
    return ProofCertificate(spec, steps, Conclusion(last.after), assumptions)


def verify_certificate(cert: ProofCertificate) -> list[str]:
    """Independently re-check a (possibly deserialized) certificate; [] means valid."""
    problems = []
    spec = cert.spec
    if not cert.steps:
        return ["certificate has no steps"] if cert.proved else []
    if cert.steps[0].before != spec.integrand:
        problems.append("first step does not start from the integrand")
    for i, (a, b) in enumerate(zip(cert.steps, cert.steps[1:])):
        if a.after != b.before:
            problems.append(f"steps {i} and {i + 1} do not chain")
    for i, s in enumerate(cert.steps):
        if not check_step(s, spec):
            problems.append(f"step {i} ({s.rule}) fails its numeric check")
    if cert.proved:
        if cert.steps[-1].relation != "integrate" or cert.steps[-1].after != cert.value:
            problems.append("conclusion does not match the final step")
        if not _parameter_free(cert.value, spec.variable):
            problems.append("concluded value depends on a parameter or the variable")
    return problems
