"""Closed identity table and a terminating, traced rewriter.

Each rule is applied bottom-up over the whole tree; a pass applies every rule
once in table order, and passes repeat until nothing changes (hard cap of 64
passes).  Rules carry positivity side conditions, decided by
:func:`~invariant_integrals.expr.is_positive` / ``is_nonneg`` under the
context's positivity assumptions (e.g. ``x > 0`` on the fold domain).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .expr import (
    HALF,
    PI,
    Acot,
    Atan,
    Cos,
    Expr,
    Function,
    Ln,
    Number,
    Pi,
    Power,
    Product,
    Sin,
    Sum,
    add,
    atan,
    cos,
    is_even_integer,
    is_nonneg,
    is_positive,
    ln,
    map_bottom_up,
    monomial_factor,
    mul,
    neg,
    power_of_power,
    sin,
    split_coeff,
)

MAX_PASSES = 64


@dataclass(frozen=True)
class Context:
    var: str | None = None
    positive: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class Rule:
    name: str
    justification: str
    apply: Callable[[Expr, Context], Expr | None]


def _acot_elim(e: Expr, ctx: Context) -> Expr | None:
    if isinstance(e, Acot) and is_positive(e.arg, ctx.positive):
        return add(mul(HALF, PI), neg(atan(e.arg)))
    return None


def _has_function(e: Expr) -> bool:
    if isinstance(e, Product):
        return any(isinstance(f, Function) for f in e.factors)
    return isinstance(e, Function)


def _distribute(e: Expr, ctx: Context) -> Expr | None:
    # only sums of function terms; polynomial factors stay intact
    if not isinstance(e, Product):
        return None
    for i, f in enumerate(e.factors):
        if isinstance(f, Sum) and any(_has_function(t) for t in f.terms):
            others = e.factors[:i] + e.factors[i + 1 :]
            return add(*(mul(t, *others) for t in f.terms))
    return None


def _power_of_power(e: Expr, ctx: Context) -> Expr | None:
    return power_of_power(e, ctx.positive)


def _monomial(e: Expr, ctx: Context) -> Expr | None:
    return monomial_factor(e, ctx.var)


def _ln_power(e: Expr, ctx: Context) -> Expr | None:
    if isinstance(e, Ln) and isinstance(e.arg, Power):
        u, p = e.arg.base, e.arg.exp
        if is_even_integer(p) and not is_nonneg(u, ctx.positive):
            return None
        return mul(p, ln(u))
    return None


def _ln_product(e: Expr, ctx: Context) -> Expr | None:
    if isinstance(e, Ln) and isinstance(e.arg, Product):
        fs = e.arg.factors
        # nonnegative factors of a positive product are each positive
        if all(is_nonneg(f, ctx.positive) for f in fs):
            return add(*(ln(f) for f in fs))
    return None


def _pi_multiple(t: Expr) -> int | None:
    if isinstance(t, Pi):
        return 1
    c, rest = split_coeff(t)
    if isinstance(rest, Pi) and c.denominator == 1:
        return int(c)
    return None


def _half_turn(e: Expr, ctx: Context) -> Expr | None:
    if not isinstance(e, (Cos, Sin)):
        return None
    terms = e.arg.terms if isinstance(e.arg, Sum) else (e.arg,)
    for i, t in enumerate(terms):
        k = _pi_multiple(t)
        if k is not None:
            rest = add(*terms[:i], *terms[i + 1 :])
            fn = cos if isinstance(e, Cos) else sin
            return mul((-1) ** (k % 2), fn(rest))
    return None


def _atan_parts(t: Expr) -> tuple[Fraction, Expr, Expr] | None:
    """term -> (coefficient, atan argument, remaining factor)."""
    c, rest = split_coeff(t)
    factors = rest.factors if isinstance(rest, Product) else (rest,)
    hits = [i for i, f in enumerate(factors) if isinstance(f, Atan)]
    if len(hits) != 1:
        return None
    i = hits[0]
    return c, factors[i].arg, mul(*factors[:i], *factors[i + 1 :])


def _atan_reciprocal(e: Expr, ctx: Context) -> Expr | None:
    if not isinstance(e, Sum):
        return None
    terms = list(e.terms)
    parts = [_atan_parts(t) for t in terms]
    for i, pi_ in enumerate(parts):
        if pi_ is None or not is_positive(pi_[1], ctx.positive):
            continue
        for j in range(i + 1, len(terms)):
            pj = parts[j]
            if pj is None or pj[0] != pi_[0] or pj[2] != pi_[2]:
                continue
            if mul(pi_[1], pj[1]) == Number(1):
                rest = [t for k, t in enumerate(terms) if k not in (i, j)]
                return add(*rest, mul(pi_[0], HALF, PI, pi_[2]))
    return None


RULES: tuple[Rule, ...] = (
    Rule("acot_elim", "acot(u) = pi/2 - atan(u) for u > 0", _acot_elim),
    Rule("distribute", "u*(v + w) = u*v + u*w", _distribute),
    Rule("power_of_power", "(u^p)^q = u^(p*q) for u > 0", _power_of_power),
    Rule("reciprocal_polynomial", "P(1/x) = x^(-deg P) * reversed(P)(x); x^(-a) normalization", _monomial),
    Rule("ln_power", "ln(u^p) = p*ln(u), so ln(1/x) = -ln(x)", _ln_power),
    Rule("ln_product", "ln(u*v) = ln(u) + ln(v) for u, v > 0", _ln_product),
    Rule("half_turn", "cos(u + pi) = -cos(u), sin(u + pi) = -sin(u)", _half_turn),
    Rule("atan_reciprocal", "atan(u) + atan(1/u) = pi/2 for u > 0", _atan_reciprocal),
)

RULES_BY_NAME = {r.name: r for r in RULES}


def apply_rule(e: Expr, rule: Rule, ctx: Context) -> Expr:
    return map_bottom_up(e, lambda node: rule.apply(node, ctx))


def rewrite_with_trace(e: Expr, ctx: Context, rules=RULES) -> tuple[Expr, list[tuple[Rule, Expr, Expr]]]:
    """Rewrite to a fixed point; return the result and (rule, before, after) moves."""
    trace = []
    for _ in range(MAX_PASSES):
        changed = False
        for rule in rules:
            new = apply_rule(e, rule, ctx)
            if new != e:
                trace.append((rule, e, new))
                e = new
                changed = True
        if not changed:
            break
    return e, trace


def rewrite(e: Expr, ctx: Context, rules=RULES) -> Expr:
    return rewrite_with_trace(e, ctx, rules)[0]
